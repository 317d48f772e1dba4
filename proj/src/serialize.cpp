#include "ftreg/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ftreg/errors.hpp"

namespace ftreg {

namespace {

constexpr int kFormatVersion = 1;

// Shortest decimal representation that round-trips to the same double.
std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw DataError("model file: bad numeric token '" + tok + "'");
    return v;
}

long parse_int(const std::string& tok) {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw DataError("model file: bad integer token '" + tok + "'");
    return v;
}

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

// Per-dimension parameterization tag used in the header.
enum class DimKind { None, Legendre, FixedKernel, MovingKernel };

struct DimSpec {
    DimKind kind = DimKind::None;
    int degree = 0;
    std::vector<double> centers;
    double width = 1.0;
};

DimSpec dim_spec_of(const FTCore& core, const Interval& domain) {
    DimSpec spec;
    for (int i = 0; i < core.rows(); ++i)
        for (int j = 0; j < core.cols(); ++j) {
            const UnivariateParam& u = core.at(i, j);
            if (u.is_const()) continue;
            DimSpec cur;
            if (u.kind() == UnivariateParam::Kind::Linear) {
                const BasisSpec& b = u.basis();
                if (!(b.domain() == domain))
                    throw UnsupportedError("model save: entry basis domain differs");
                if (b.kind() == BasisSpec::Kind::Legendre) {
                    cur.kind = DimKind::Legendre;
                    cur.degree = b.degree();
                } else {
                    cur.kind = DimKind::FixedKernel;
                    cur.centers = b.centers();
                    cur.width = b.width();
                }
            } else {
                cur.kind = DimKind::MovingKernel;
                cur.width = u.kernel_width();
            }
            if (spec.kind == DimKind::None) {
                spec = cur;
            } else if (spec.kind != cur.kind || spec.degree != cur.degree ||
                       spec.centers != cur.centers || spec.width != cur.width) {
                throw UnsupportedError(
                    "model save: heterogeneous parameterization within a dimension");
            }
        }
    return spec;
}

} // namespace

double SavedModel::predict(std::span<const double> raw_x) const {
    EvalWorkspace ws;
    return predict(raw_x, ws);
}

double SavedModel::predict(std::span<const double> raw_x, EvalWorkspace& ws) const {
    if (static_cast<int>(raw_x.size()) != ft.dim())
        throw InputError("feature vector dimension does not match model");
    double value;
    if (normalized) {
        std::vector<double> z(raw_x.size());
        for (std::size_t k = 0; k < raw_x.size(); ++k)
            z[k] = (raw_x[k] - x_stats[k].mean) / x_stats[k].std;
        value = ft.eval(z, ws);
        value = value * y_stats.std + y_stats.mean;
    } else {
        value = ft.eval(raw_x, ws);
    }
    return value;
}

std::string model_to_text(const SavedModel& m) {
    const FunctionTrain& ft = m.ft;
    std::ostringstream out;
    out << "ftmodel " << kFormatVersion << '\n';
    out << "dim " << ft.dim() << '\n';
    out << "ranks";
    for (int r : ft.ranks()) out << ' ' << r;
    out << '\n';
    out << "normalized " << (m.normalized ? 1 : 0) << '\n';
    if (m.normalized) {
        if (static_cast<int>(m.x_stats.size()) != ft.dim())
            throw InputError("model save: stats size mismatch");
        for (int k = 0; k < ft.dim(); ++k)
            out << "xstats " << k << ' ' << fmt(m.x_stats[k].mean) << ' '
                << fmt(m.x_stats[k].std) << '\n';
        out << "ystats " << fmt(m.y_stats.mean) << ' ' << fmt(m.y_stats.std)
            << '\n';
    }
    for (int k = 0; k < ft.dim(); ++k) {
        const Interval& dom = ft.domains()[k];
        out << "domain " << k << ' ' << fmt(dom.lo) << ' ' << fmt(dom.hi) << '\n';
        const DimSpec spec = dim_spec_of(ft.core(k), dom);
        out << "basis " << k << ' ';
        switch (spec.kind) {
        case DimKind::None: out << "none"; break;
        case DimKind::Legendre: out << "legendre " << spec.degree; break;
        case DimKind::FixedKernel:
            out << "kernel " << spec.centers.size();
            for (double c : spec.centers) out << ' ' << fmt(c);
            out << ' ' << fmt(spec.width);
            break;
        case DimKind::MovingKernel: out << "moving-kernel " << fmt(spec.width); break;
        }
        out << '\n';
    }
    std::size_t entries = 0;
    for (int k = 0; k < ft.dim(); ++k)
        entries += static_cast<std::size_t>(ft.core(k).rows()) * ft.core(k).cols();
    out << "entries " << entries << '\n';
    for (int k = 0; k < ft.dim(); ++k) {
        const FTCore& core = ft.core(k);
        for (int i = 0; i < core.rows(); ++i)
            for (int j = 0; j < core.cols(); ++j) {
                const UnivariateParam& u = core.at(i, j);
                out << k << ' ' << i << ' ' << j << ' ';
                switch (u.kind()) {
                case UnivariateParam::Kind::ConstZero: out << "zero 0"; break;
                case UnivariateParam::Kind::ConstOne: out << "one 0"; break;
                case UnivariateParam::Kind::Linear: out << "linear " << u.num_params(); break;
                case UnivariateParam::Kind::MovingKernel:
                    out << "kernel " << u.num_params();
                    break;
                }
                for (double t : u.params()) out << ' ' << fmt(t);
                out << '\n';
            }
    }
    out << "end\n";
    return out.str();
}

SavedModel model_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto next_tokens = [&](const char* what) {
        while (std::getline(in, line)) {
            auto t = tokens(line);
            if (!t.empty()) return t;
        }
        throw DataError(std::string("model file: unexpected end before ") + what);
    };

    auto header = next_tokens("header");
    if (header.size() != 2 || header[0] != "ftmodel")
        throw DataError("model file: missing 'ftmodel' header");
    if (parse_int(header[1]) != kFormatVersion)
        throw DataError("model file: unsupported format version " + header[1]);

    auto dim_line = next_tokens("dim");
    if (dim_line.size() != 2 || dim_line[0] != "dim")
        throw DataError("model file: expected 'dim'");
    const int d = static_cast<int>(parse_int(dim_line[1]));
    if (d < 1) throw DataError("model file: dimension must be >= 1");

    auto ranks_line = next_tokens("ranks");
    if (ranks_line.size() != static_cast<std::size_t>(d) + 2 || ranks_line[0] != "ranks")
        throw DataError("model file: expected 'ranks' with d+1 values");
    RankVector ranks(d + 1);
    for (int k = 0; k <= d; ++k) ranks[k] = static_cast<int>(parse_int(ranks_line[k + 1]));

    SavedModel m{FunctionTrain({FTCore(1, 1)}, {Interval{-1, 1}}), false, {}, {}};

    auto norm_line = next_tokens("normalized");
    if (norm_line.size() != 2 || norm_line[0] != "normalized")
        throw DataError("model file: expected 'normalized'");
    m.normalized = parse_int(norm_line[1]) != 0;
    if (m.normalized) {
        m.x_stats.resize(d);
        for (int k = 0; k < d; ++k) {
            auto t = next_tokens("xstats");
            if (t.size() != 4 || t[0] != "xstats" || parse_int(t[1]) != k)
                throw DataError("model file: expected 'xstats' for dimension " +
                                std::to_string(k));
            m.x_stats[k].mean = parse_double(t[2]);
            m.x_stats[k].std = parse_double(t[3]);
        }
        auto t = next_tokens("ystats");
        if (t.size() != 3 || t[0] != "ystats")
            throw DataError("model file: expected 'ystats'");
        m.y_stats.mean = parse_double(t[1]);
        m.y_stats.std = parse_double(t[2]);
    } else {
        m.x_stats.assign(d, ColumnStats{});
    }

    std::vector<Interval> domains(d);
    std::vector<DimSpec> specs(d);
    for (int k = 0; k < d; ++k) {
        auto dt = next_tokens("domain");
        if (dt.size() != 4 || dt[0] != "domain" || parse_int(dt[1]) != k)
            throw DataError("model file: expected 'domain' for dimension " +
                            std::to_string(k));
        domains[k] = Interval{parse_double(dt[2]), parse_double(dt[3])};
        auto bt = next_tokens("basis");
        if (bt.size() < 3 || bt[0] != "basis" || parse_int(bt[1]) != k)
            throw DataError("model file: expected 'basis' for dimension " +
                            std::to_string(k));
        DimSpec& spec = specs[k];
        if (bt[2] == "none") {
            spec.kind = DimKind::None;
        } else if (bt[2] == "legendre") {
            if (bt.size() != 4) throw DataError("model file: bad legendre basis line");
            spec.kind = DimKind::Legendre;
            spec.degree = static_cast<int>(parse_int(bt[3]));
        } else if (bt[2] == "kernel") {
            if (bt.size() < 5) throw DataError("model file: bad kernel basis line");
            spec.kind = DimKind::FixedKernel;
            const int count = static_cast<int>(parse_int(bt[3]));
            if (bt.size() != static_cast<std::size_t>(count) + 5)
                throw DataError("model file: kernel basis token count mismatch");
            for (int c = 0; c < count; ++c)
                spec.centers.push_back(parse_double(bt[4 + c]));
            spec.width = parse_double(bt.back());
        } else if (bt[2] == "moving-kernel") {
            if (bt.size() != 4)
                throw DataError("model file: bad moving-kernel basis line");
            spec.kind = DimKind::MovingKernel;
            spec.width = parse_double(bt[3]);
        } else {
            throw DataError("model file: unknown basis kind '" + bt[2] + "'");
        }
    }

    auto et = next_tokens("entries");
    if (et.size() != 2 || et[0] != "entries")
        throw DataError("model file: expected 'entries'");
    const long entry_count = parse_int(et[1]);

    std::vector<FTCore> cores;
    cores.reserve(d);
    for (int k = 0; k < d; ++k) cores.emplace_back(ranks[k], ranks[k + 1]);

    for (long e = 0; e < entry_count; ++e) {
        auto t = next_tokens("entry");
        if (t.size() < 5) throw DataError("model file: short entry record");
        const int k = static_cast<int>(parse_int(t[0]));
        const int i = static_cast<int>(parse_int(t[1]));
        const int j = static_cast<int>(parse_int(t[2]));
        if (k < 0 || k >= d || i < 0 || i >= ranks[k] || j < 0 || j >= ranks[k + 1])
            throw DataError("model file: entry index out of range");
        const std::string& variant = t[3];
        const int p = static_cast<int>(parse_int(t[4]));
        if (t.size() != static_cast<std::size_t>(p) + 5)
            throw DataError("model file: entry parameter count mismatch");
        std::vector<double> theta(p);
        for (int l = 0; l < p; ++l) theta[l] = parse_double(t[5 + l]);

        const DimSpec& spec = specs[k];
        if (variant == "zero") {
            cores[k].at(i, j) = UnivariateParam::zero();
        } else if (variant == "one") {
            cores[k].at(i, j) = UnivariateParam::one();
        } else if (variant == "linear") {
            BasisSpec basis =
                spec.kind == DimKind::Legendre
                    ? BasisSpec::legendre(spec.degree, domains[k])
                    : BasisSpec::fixed_kernel(spec.centers, spec.width, domains[k]);
            if (spec.kind != DimKind::Legendre && spec.kind != DimKind::FixedKernel)
                throw DataError("model file: linear entry in dimension without a basis");
            cores[k].at(i, j) = UnivariateParam::linear(std::move(basis), std::move(theta));
        } else if (variant == "kernel") {
            if (spec.kind != DimKind::MovingKernel)
                throw DataError("model file: kernel entry in non-kernel dimension");
            if (p % 2 != 0) throw DataError("model file: kernel entry needs even p");
            std::vector<double> coeffs(theta.begin(), theta.begin() + p / 2);
            std::vector<double> centers(theta.begin() + p / 2, theta.end());
            cores[k].at(i, j) = UnivariateParam::moving_kernel(
                std::move(coeffs), std::move(centers), spec.width, domains[k]);
        } else {
            throw DataError("model file: unknown entry variant '" + variant + "'");
        }
    }
    auto end = next_tokens("end");
    if (end.size() != 1 || end[0] != "end")
        throw DataError("model file: expected 'end'");

    m.ft = FunctionTrain(std::move(cores), std::move(domains));
    return m;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw DataError("cannot rename temporary file onto " + path);
    }
}

void save_model(const SavedModel& m, const std::string& path) {
    write_file_atomic(path, model_to_text(m));
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return model_from_text(buffer.str());
}

} // namespace ftreg
