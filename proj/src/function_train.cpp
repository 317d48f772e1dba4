#include "ftreg/function_train.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace ftreg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

} // namespace

RankVector uniform_ranks(int d, int interior_rank) {
    if (d < 1) throw InputError("dimension must be >= 1");
    if (interior_rank < 1) throw InputError("rank must be >= 1");
    RankVector r(d + 1, interior_rank);
    r.front() = 1;
    r.back() = 1;
    return r;
}

void validate_ranks(const RankVector& r) {
    if (r.size() < 2) throw InputError("rank vector needs >= 2 entries");
    if (r.front() != 1 || r.back() != 1)
        throw InputError("boundary ranks must equal 1");
    for (int v : r)
        if (v < 1) throw InputError("ranks must be >= 1");
}

// ---------------------------------------------------------------------------
// FTCore

FTCore::FTCore(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw InputError("core shape must be positive");
    entries_.resize(static_cast<std::size_t>(rows) * cols, UnivariateParam::zero());
}

int FTCore::num_params() const {
    int total = 0;
    for (const auto& e : entries_) total += e.num_params();
    return total;
}

void FTCore::eval(double x, std::span<double> out) const {
    for (std::size_t e = 0; e < entries_.size(); ++e) out[e] = entries_[e].eval(x);
}

const BasisSpec* FTCore::shared_linear_basis() const {
    const BasisSpec* shared = nullptr;
    for (const auto& e : entries_) {
        if (e.is_const()) continue;
        if (e.kind() != UnivariateParam::Kind::Linear) return nullptr;
        if (!shared) {
            shared = &e.basis();
        } else if (!(*shared == e.basis())) {
            return nullptr;
        }
    }
    return shared;
}

// ---------------------------------------------------------------------------
// ParamMap

std::size_t ParamMap::entry_offset(int k, int i, int j) const {
    return core_offsets_[k] + entry_offsets_[k][static_cast<std::size_t>(i) * cols_[k] + j];
}

ParamIndex ParamMap::index_of(std::size_t flat) const {
    if (flat >= total_) throw InputError("parameter index out of range");
    int k = 0;
    while (core_offsets_[k + 1] <= flat) ++k;
    const std::size_t in_core = flat - core_offsets_[k];
    const auto& offs = entry_offsets_[k];
    std::size_t e = 0;
    while (offs[e + 1] <= in_core) ++e;
    ParamIndex idx;
    idx.k = k;
    idx.i = static_cast<int>(e) / cols_[k];
    idx.j = static_cast<int>(e) % cols_[k];
    idx.l = static_cast<int>(in_core - offs[e]);
    return idx;
}

// ---------------------------------------------------------------------------
// FunctionTrain

FunctionTrain::FunctionTrain(std::vector<FTCore> cores,
                             std::vector<Interval> domains)
    : cores_(std::move(cores)), domains_(std::move(domains)) {
    if (cores_.empty()) throw InputError("function train needs >= 1 core");
    if (domains_.size() != cores_.size())
        throw InputError("one domain per dimension required");
    for (const auto& dom : domains_) dom.validate();
    ranks_.resize(cores_.size() + 1);
    ranks_.front() = cores_.front().rows();
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        if (k > 0 && cores_[k].rows() != cores_[k - 1].cols())
            throw InputError("adjacent core shapes do not chain");
        ranks_[k + 1] = cores_[k].cols();
    }
    validate_ranks(ranks_);
    for (std::size_t k = 0; k < cores_.size(); ++k) {
        const FTCore& c = cores_[k];
        for (int i = 0; i < c.rows(); ++i)
            for (int j = 0; j < c.cols(); ++j) {
                const auto& u = c.at(i, j);
                if (u.has_domain() && !(u.domain() == domains_[k]))
                    throw ConfigError("entry domain differs from core domain");
            }
    }
}

std::size_t FunctionTrain::num_params() const {
    std::size_t total = 0;
    for (const auto& c : cores_) total += c.num_params();
    return total;
}

ParamMap FunctionTrain::param_map() const {
    ParamMap map;
    map.core_offsets_.resize(dim() + 1, 0);
    map.entry_offsets_.resize(dim());
    map.cols_.resize(dim());
    std::size_t off = 0;
    for (int k = 0; k < dim(); ++k) {
        const FTCore& c = cores_[k];
        map.core_offsets_[k] = off;
        map.cols_[k] = c.cols();
        auto& offs = map.entry_offsets_[k];
        offs.resize(static_cast<std::size_t>(c.rows()) * c.cols() + 1);
        std::size_t local = 0;
        for (int i = 0; i < c.rows(); ++i)
            for (int j = 0; j < c.cols(); ++j) {
                offs[static_cast<std::size_t>(i) * c.cols() + j] = local;
                local += c.at(i, j).num_params();
            }
        offs.back() = local;
        off += local;
    }
    map.core_offsets_[dim()] = off;
    map.total_ = off;
    return map;
}

double FunctionTrain::eval(std::span<const double> x) const {
    EvalWorkspace ws;
    return eval(x, ws);
}

double FunctionTrain::eval(std::span<const double> x, EvalWorkspace& ws,
                           const BasisRows* pre) const {
    if (static_cast<int>(x.size()) != dim())
        throw InputError("evaluation point dimension mismatch");
    ws.a.assign(1, 1.0);
    std::vector<double>& a = ws.a;
    std::vector<double>& b = ws.b;
    for (int k = 0; k < dim(); ++k) {
        const FTCore& c = cores_[k];
        const std::span<const double> row =
            (pre && k < static_cast<int>(pre->rows.size()) && !pre->rows[k].empty())
                ? pre->rows[k]
                : std::span<const double>{};
        b.assign(c.cols(), 0.0);
        for (int i = 0; i < c.rows(); ++i) {
            const double ai = a[i];
            if (ai == 0.0) continue;
            for (int j = 0; j < c.cols(); ++j) {
                const UnivariateParam& u = c.at(i, j);
                double v;
                if (!row.empty() && u.kind() == UnivariateParam::Kind::Linear)
                    v = dot(u.params(), row);
                else if (u.kind() == UnivariateParam::Kind::ConstZero)
                    v = 0.0;
                else if (u.kind() == UnivariateParam::Kind::ConstOne)
                    v = 1.0;
                else
                    v = u.eval(x[k]);
                b[j] += ai * v;
            }
        }
        std::swap(a, b);
    }
    return a[0];
}

double FunctionTrain::eval_grad(std::span<const double> x, EvalWorkspace& ws,
                                std::span<double> grad,
                                const BasisRows* pre) const {
    if (static_cast<int>(x.size()) != dim())
        throw InputError("evaluation point dimension mismatch");
    if (grad.size() != num_params())
        throw InputError("gradient buffer length mismatch");

    const int d = dim();
    ws.core_vals.resize(d);
    ws.core_off.resize(d);
    ws.a.assign(1, 1.0);
    std::vector<double>& a = ws.a;
    std::vector<double>& b = ws.b;

    // Forward sweep: per core, fill the gradient block with a[i] * du/dtheta
    // and evaluate the core matrix, then advance the left product.
    std::size_t off = 0;
    for (int k = 0; k < d; ++k) {
        ws.core_off[k] = off;
        const FTCore& c = cores_[k];
        auto& vals = ws.core_vals[k];
        vals.resize(static_cast<std::size_t>(c.rows()) * c.cols());
        const std::span<const double> row =
            (pre && k < static_cast<int>(pre->rows.size()) && !pre->rows[k].empty())
                ? pre->rows[k]
                : std::span<const double>{};
        for (int i = 0; i < c.rows(); ++i) {
            const double ai = a[i];
            for (int j = 0; j < c.cols(); ++j) {
                const UnivariateParam& u = c.at(i, j);
                const int p = u.num_params();
                double v;
                std::span<double> slot = grad.subspan(off, p);
                if (!row.empty() && u.kind() == UnivariateParam::Kind::Linear) {
                    v = dot(u.params(), row);
                    for (int l = 0; l < p; ++l) slot[l] = ai * row[l];
                } else if (u.is_const()) {
                    v = u.kind() == UnivariateParam::Kind::ConstOne ? 1.0 : 0.0;
                } else {
                    v = u.eval_grad(x[k], slot);
                    for (int l = 0; l < p; ++l) slot[l] *= ai;
                }
                vals[static_cast<std::size_t>(i) * c.cols() + j] = v;
                off += p;
            }
        }
        b.assign(c.cols(), 0.0);
        for (int i = 0; i < c.rows(); ++i) {
            const double ai = a[i];
            if (ai == 0.0) continue;
            const double* vrow = vals.data() + static_cast<std::size_t>(i) * c.cols();
            for (int j = 0; j < c.cols(); ++j) b[j] += ai * vrow[j];
        }
        std::swap(a, b);
    }
    const double value = a[0];

    // Backward sweep: multiply each block by the right product.
    if (d > 1) {
        std::vector<double>& cvec = ws.c;
        std::vector<double>& cnext = ws.c2;
        const FTCore& last = cores_[d - 1];
        cvec.assign(last.rows(), 0.0);
        for (int i = 0; i < last.rows(); ++i)
            cvec[i] = ws.core_vals[d - 1][static_cast<std::size_t>(i) * last.cols()];
        for (int k = d - 2; k >= 0; --k) {
            const FTCore& c = cores_[k];
            std::size_t pos = ws.core_off[k];
            for (int i = 0; i < c.rows(); ++i)
                for (int j = 0; j < c.cols(); ++j) {
                    const int p = c.at(i, j).num_params();
                    const double cj = cvec[j];
                    for (int l = 0; l < p; ++l) grad[pos + l] *= cj;
                    pos += p;
                }
            if (k > 0) {
                cnext.assign(c.rows(), 0.0);
                const auto& vals = ws.core_vals[k];
                for (int i = 0; i < c.rows(); ++i) {
                    double s = 0.0;
                    const double* vrow = vals.data() + static_cast<std::size_t>(i) * c.cols();
                    for (int j = 0; j < c.cols(); ++j) s += vrow[j] * cvec[j];
                    cnext[i] = s;
                }
                std::swap(cvec, cnext);
            }
        }
    }
    return value;
}

std::vector<double> FunctionTrain::pack_params() const {
    std::vector<double> theta;
    theta.reserve(num_params());
    for (const auto& c : cores_)
        for (int i = 0; i < c.rows(); ++i)
            for (int j = 0; j < c.cols(); ++j) {
                const auto p = c.at(i, j).params();
                theta.insert(theta.end(), p.begin(), p.end());
            }
    return theta;
}

void FunctionTrain::set_params(std::span<const double> theta) {
    if (theta.size() != num_params())
        throw InputError("parameter vector length mismatch");
    std::size_t off = 0;
    for (auto& c : cores_)
        for (int i = 0; i < c.rows(); ++i)
            for (int j = 0; j < c.cols(); ++j) {
                UnivariateParam& u = c.at(i, j);
                const std::size_t p = static_cast<std::size_t>(u.num_params());
                u.set_params(theta.subspan(off, p));
                off += p;
            }
}

FunctionTrain FunctionTrain::with_params(std::span<const double> theta) const {
    FunctionTrain ft = *this;
    ft.set_params(theta);
    return ft;
}

// ---------------------------------------------------------------------------
// coregrad

void coregrad_left(const FTCore& core, double x, std::span<const double> a,
                   std::span<double> out) {
    if (static_cast<int>(a.size()) != core.rows())
        throw InputError("left multiplier length does not match core rows");
    std::size_t off = 0;
    for (int i = 0; i < core.rows(); ++i)
        for (int j = 0; j < core.cols(); ++j) {
            const UnivariateParam& u = core.at(i, j);
            const int p = u.num_params();
            if (p == 0) continue;
            std::span<double> slot = out.subspan(off, p);
            u.grad(x, slot);
            for (int l = 0; l < p; ++l) slot[l] *= a[i];
            off += p;
        }
}

void coregrad_right(const FTCore& core, std::span<const double> c,
                    std::span<double> partials) {
    if (static_cast<int>(c.size()) != core.cols())
        throw InputError("right multiplier length does not match core cols");
    std::size_t off = 0;
    for (int i = 0; i < core.rows(); ++i)
        for (int j = 0; j < core.cols(); ++j) {
            const int p = core.at(i, j).num_params();
            for (int l = 0; l < p; ++l) partials[off + l] *= c[j];
            off += p;
        }
}

// ---------------------------------------------------------------------------
// Additive construction

FunctionTrain additive_ft(std::vector<UnivariateParam> parts) {
    std::vector<Interval> domains;
    domains.reserve(parts.size());
    for (const auto& p : parts)
        domains.push_back(p.has_domain() ? p.domain() : Interval{-1.0, 1.0});
    return additive_ft(std::move(parts), std::move(domains));
}

FunctionTrain additive_ft(std::vector<UnivariateParam> parts,
                          std::vector<Interval> domains) {
    const int d = static_cast<int>(parts.size());
    if (d < 2) throw InputError("additive construction needs d >= 2");
    if (domains.size() != parts.size())
        throw InputError("one domain per part required");
    std::vector<FTCore> cores;
    cores.reserve(d);
    {
        FTCore first(1, 2);
        first.at(0, 0) = std::move(parts[0]);
        first.at(0, 1) = UnivariateParam::one();
        cores.push_back(std::move(first));
    }
    for (int k = 1; k + 1 < d; ++k) {
        FTCore mid(2, 2);
        mid.at(0, 0) = UnivariateParam::one();
        mid.at(0, 1) = UnivariateParam::zero();
        mid.at(1, 0) = std::move(parts[k]);
        mid.at(1, 1) = UnivariateParam::one();
        cores.push_back(std::move(mid));
    }
    {
        FTCore last(2, 1);
        last.at(0, 0) = UnivariateParam::one();
        last.at(1, 0) = std::move(parts[d - 1]);
        cores.push_back(std::move(last));
    }
    return FunctionTrain(std::move(cores), std::move(domains));
}

// ---------------------------------------------------------------------------
// Coefficient TT conversion and rounding

FunctionTrain ftc_to_ft(std::span<const TTCore> tt_cores,
                        std::span<const BasisSpec> bases) {
    if (tt_cores.empty() || tt_cores.size() != bases.size())
        throw InputError("need one TT core and one basis per dimension");
    std::vector<FTCore> cores;
    std::vector<Interval> domains;
    for (std::size_t k = 0; k < tt_cores.size(); ++k) {
        const TTCore& t = tt_cores[k];
        if (t.basis_size != bases[k].size())
            throw InputError("TT core basis-mode size does not match basis");
        if (t.data.size() != static_cast<std::size_t>(t.left_rank) * t.basis_size * t.right_rank)
            throw InputError("TT core data size mismatch");
        if (k > 0 && t.left_rank != tt_cores[k - 1].right_rank)
            throw InputError("TT core ranks do not chain");
        FTCore core(t.left_rank, t.right_rank);
        std::vector<double> coeffs(t.basis_size);
        for (int i = 0; i < t.left_rank; ++i)
            for (int j = 0; j < t.right_rank; ++j) {
                for (int l = 0; l < t.basis_size; ++l) coeffs[l] = t.at(i, l, j);
                core.at(i, j) = UnivariateParam::linear(bases[k], coeffs);
            }
        cores.push_back(std::move(core));
        domains.push_back(bases[k].domain());
    }
    if (tt_cores.front().left_rank != 1 || tt_cores.back().right_rank != 1)
        throw InputError("boundary TT ranks must equal 1");
    return FunctionTrain(std::move(cores), std::move(domains));
}

std::vector<TTCore> ft_to_coeff_tt(const FunctionTrain& ft,
                                   std::vector<BasisSpec>* bases_out) {
    std::vector<TTCore> out;
    std::vector<BasisSpec> bases;
    for (int k = 0; k < ft.dim(); ++k) {
        const FTCore& c = ft.core(k);
        const BasisSpec* shared = c.shared_linear_basis();
        BasisSpec basis = BasisSpec::legendre(0, ft.domains()[k]);
        if (shared) {
            if (shared->kind() != BasisSpec::Kind::Legendre)
                throw UnsupportedError(
                    "coefficient conversion requires an orthonormal basis");
            basis = *shared;
        } else {
            // All-constant cores expand over the degree-0 basis; anything
            // else (kernels, mixed bases) has no shared-coefficient form.
            for (int i = 0; i < c.rows(); ++i)
                for (int j = 0; j < c.cols(); ++j)
                    if (!c.at(i, j).is_const())
                        throw UnsupportedError(
                            "coefficient conversion requires one Linear basis per dimension");
        }
        TTCore t;
        t.left_rank = c.rows();
        t.basis_size = basis.size();
        t.right_rank = c.cols();
        t.data.assign(static_cast<std::size_t>(t.left_rank) * t.basis_size * t.right_rank, 0.0);
        for (int i = 0; i < c.rows(); ++i)
            for (int j = 0; j < c.cols(); ++j) {
                const UnivariateParam& u = c.at(i, j);
                switch (u.kind()) {
                case UnivariateParam::Kind::ConstZero:
                    break;
                case UnivariateParam::Kind::ConstOne:
                    // phi_0 is identically 1 under the probability measure.
                    t.at(i, 0, j) = 1.0;
                    break;
                case UnivariateParam::Kind::Linear: {
                    const auto theta = u.params();
                    for (int l = 0; l < t.basis_size; ++l) t.at(i, l, j) = theta[l];
                    break;
                }
                case UnivariateParam::Kind::MovingKernel:
                    throw UnsupportedError(
                        "coefficient conversion requires a Linear parameterization");
                }
            }
        out.push_back(std::move(t));
        bases.push_back(std::move(basis));
    }
    if (bases_out) *bases_out = std::move(bases);
    return out;
}

namespace {

struct TTRounded {
    std::vector<TTCore> cores;
    RankVector ranks;
};

// Left-to-right QR orthogonalization followed by a right-to-left truncated
// SVD sweep with per-core threshold delta * ||A||_F / sqrt(d - 1).
TTRounded tt_round(std::vector<TTCore> cores, double delta) {
    const int d = static_cast<int>(cores.size());
    TTRounded result;
    if (d == 1) {
        result.cores = std::move(cores);
        result.ranks = {1, 1};
        return result;
    }

    for (int k = 0; k < d - 1; ++k) {
        TTCore& t = cores[k];
        RowMajorMap v(t.data.data(),
                      static_cast<Eigen::Index>(t.left_rank) * t.basis_size,
                      t.right_rank);
        Eigen::MatrixXd vm = v;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(vm);
        const Eigen::Index q = std::min(vm.rows(), vm.cols());
        Eigen::MatrixXd thin_q =
            qr.householderQ() * Eigen::MatrixXd::Identity(vm.rows(), q);
        Eigen::MatrixXd r =
            qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();

        t.right_rank = static_cast<int>(q);
        t.data.assign(thin_q.size(), 0.0);
        RowMajorMap(t.data.data(), thin_q.rows(), thin_q.cols()) = thin_q;

        TTCore& next = cores[k + 1];
        RowMajorMap h(next.data.data(), next.left_rank,
                      static_cast<Eigen::Index>(next.basis_size) * next.right_rank);
        Eigen::MatrixXd folded = r * h;
        next.left_rank = static_cast<int>(q);
        next.data.assign(folded.size(), 0.0);
        RowMajorMap(next.data.data(), folded.rows(), folded.cols()) = folded;
    }

    double norm_sq = 0.0;
    for (double v : cores.back().data) norm_sq += v * v;
    const double threshold =
        delta * std::sqrt(norm_sq) / std::sqrt(static_cast<double>(d - 1));

    for (int k = d - 1; k >= 1; --k) {
        TTCore& t = cores[k];
        RowMajorMap h(t.data.data(), t.left_rank,
                      static_cast<Eigen::Index>(t.basis_size) * t.right_rank);
        Eigen::MatrixXd hm = h;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            hm, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        int keep = static_cast<int>(sv.size());
        double tail = 0.0;
        while (keep > 1) {
            const double cand = tail + sv[keep - 1] * sv[keep - 1];
            if (std::sqrt(cand) > threshold) break;
            tail = cand;
            --keep;
        }
        Eigen::MatrixXd vt = svd.matrixV().leftCols(keep).transpose();
        Eigen::MatrixXd us = svd.matrixU().leftCols(keep) *
                             sv.head(keep).asDiagonal();

        t.left_rank = keep;
        t.data.assign(vt.size(), 0.0);
        RowMajorMap(t.data.data(), vt.rows(), vt.cols()) = vt;

        TTCore& prev = cores[k - 1];
        RowMajorMap v(prev.data.data(),
                      static_cast<Eigen::Index>(prev.left_rank) * prev.basis_size,
                      prev.right_rank);
        Eigen::MatrixXd folded = v * us;
        prev.right_rank = keep;
        prev.data.assign(folded.size(), 0.0);
        RowMajorMap(prev.data.data(), folded.rows(), folded.cols()) = folded;
    }

    result.ranks.resize(d + 1);
    result.ranks[0] = cores.front().left_rank;
    for (int k = 0; k < d; ++k) result.ranks[k + 1] = cores[k].right_rank;
    result.cores = std::move(cores);
    return result;
}

} // namespace

FunctionTrain ft_round(const FunctionTrain& ft, double delta) {
    if (!(delta > 0.0)) throw ConfigError("rounding tolerance must be > 0");
    std::vector<BasisSpec> bases;
    auto tt = ft_to_coeff_tt(ft, &bases);
    auto rounded = tt_round(std::move(tt), delta);
    return ftc_to_ft(rounded.cores, bases);
}

RankVector ft_rounding_rank(const FunctionTrain& ft, double delta) {
    if (!(delta > 0.0)) throw ConfigError("rounding tolerance must be > 0");
    auto tt = ft_to_coeff_tt(ft);
    return tt_round(std::move(tt), delta).ranks;
}

} // namespace ftreg
