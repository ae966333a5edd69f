#include "mmr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmr {

namespace {

[[noreturn]] void fail(const std::filesystem::path& file, const std::string& why) {
    throw std::invalid_argument(file.string() + ": " + why);
}

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::invalid_argument("cannot open for writing: " + file.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open for reading: " + file.string());
    return in;
}

// Header line `# kind key=value ...`; returns the key/value pairs.
std::map<std::string, std::string> read_header(std::ifstream& in,
                                               const std::filesystem::path& file,
                                               const std::string& kind) {
    std::string line;
    if (!std::getline(in, line)) fail(file, "empty file");
    std::istringstream ss(line);
    std::string hash, got;
    ss >> hash >> got;
    if (hash != "#" || got != kind) fail(file, "expected header '# " + kind + " ...'");
    std::map<std::string, std::string> kv;
    std::string tok;
    while (ss >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) fail(file, "malformed header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

long header_long(const std::map<std::string, std::string>& kv, const std::string& key,
                 const std::filesystem::path& file) {
    auto it = kv.find(key);
    if (it == kv.end()) fail(file, "header missing '" + key + "'");
    return std::stol(it->second);
}

std::vector<double> split_csv(const std::string& line, const std::filesystem::path& file) {
    std::vector<double> vals;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            vals.push_back(std::stod(cell));
        } catch (const std::exception&) {
            fail(file, "bad numeric cell '" + cell + "'");
        }
    }
    return vals;
}

// Writes any Eigen vector expression as one CSV line (index-based access, so
// row views of column-major storage serialize correctly).
template <class Row>
void write_row(std::ofstream& out, const Row& row) {
    for (Index j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        out << format_double(row(j));
    }
    out << '\n';
}

Matrix read_matrix_rows(std::ifstream& in, const std::filesystem::path& file, Index rows,
                        Index cols) {
    Matrix M(rows, cols);
    std::string line;
    for (Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) fail(file, "unexpected end of file");
        auto vals = split_csv(line, file);
        if (static_cast<Index>(vals.size()) != cols)
            fail(file, "row " + std::to_string(i) + " has " + std::to_string(vals.size()) +
                           " cells, expected " + std::to_string(cols));
        for (Index j = 0; j < cols; ++j) M(i, j) = vals[static_cast<std::size_t>(j)];
    }
    return M;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_stochastic(const std::filesystem::path& file, const StochasticMatrix& P) {
    auto out = open_out(file);
    out << "# stochastic n=" << P.size() << '\n';
    for (Index i = 0; i < P.size(); ++i) write_row(out, P.matrix().row(i));
}

StochasticMatrix load_stochastic(const std::filesystem::path& file) {
    auto in = open_in(file);
    auto kv = read_header(in, file, "stochastic");
    Index n = header_long(kv, "n", file);
    Matrix M = read_matrix_rows(in, file, n, n);
    // repair tiny row-sum drift from serialization; reject anything material
    for (Index i = 0; i < n; ++i) {
        double s = M.row(i).sum();
        double dev = std::abs(s - 1.0);
        if (dev >= 1e-6)
            fail(file, "row " + std::to_string(i) + " sums to " + format_double(s));
        if (dev > kRowSumTol) M.row(i) /= s;
        for (Index j = 0; j < n; ++j)
            if (M(i, j) < 0.0) fail(file, "negative entry in row " + std::to_string(i));
    }
    return StochasticMatrix(std::move(M));
}

void save_distribution(const std::filesystem::path& file, const DistributionVector& d) {
    auto out = open_out(file);
    out << "# distribution n=" << d.size() << '\n';
    write_row(out, d.probs());
}

DistributionVector load_distribution(const std::filesystem::path& file) {
    auto in = open_in(file);
    auto kv = read_header(in, file, "distribution");
    Index n = header_long(kv, "n", file);
    Matrix row = read_matrix_rows(in, file, 1, n);
    Vector v = row.row(0).transpose();
    double dev = std::abs(v.sum() - 1.0);
    if (dev >= 1e-6) fail(file, "distribution mass is " + format_double(v.sum()));
    if (dev > kRowSumTol) v /= v.sum();
    return DistributionVector(std::move(v));
}

void save_trajectory(const std::filesystem::path& file, const Trajectory& traj, Index n_a,
                     Index n_c) {
    auto out = open_out(file);
    out << "# trajectory N=" << traj.steps() << " n_a=" << n_a << " n_c=" << n_c << '\n';
    out << "t,y,u" << (traj.has_modes() ? ",mode" : "") << '\n';
    for (Index t = 0; t < traj.length(); ++t) {
        out << t << ',' << format_double(traj.y(t)) << ',' << format_double(traj.u(t));
        if (traj.has_modes()) out << ',' << traj.modes[static_cast<std::size_t>(t)];
        out << '\n';
    }
}

LoadedTrajectory load_trajectory(const std::filesystem::path& file) {
    auto in = open_in(file);
    auto kv = read_header(in, file, "trajectory");
    long N = header_long(kv, "N", file);
    LoadedTrajectory lt;
    lt.n_a = header_long(kv, "n_a", file);
    lt.n_c = header_long(kv, "n_c", file);
    std::string line;
    if (!std::getline(in, line)) fail(file, "missing column header");
    bool with_modes = line == "t,y,u,mode";
    if (!with_modes && line != "t,y,u") fail(file, "unrecognized column header '" + line + "'");
    lt.traj.y = Vector::Zero(N + 1);
    lt.traj.u = Vector::Zero(N + 1);
    if (with_modes) lt.traj.modes.resize(static_cast<std::size_t>(N) + 1);
    for (long t = 0; t <= N; ++t) {
        if (!std::getline(in, line)) fail(file, "unexpected end of file");
        auto vals = split_csv(line, file);
        if (static_cast<long>(vals.size()) != (with_modes ? 4 : 3))
            fail(file, "bad column count at t = " + std::to_string(t));
        if (static_cast<long>(vals[0]) != t) fail(file, "out-of-order time index");
        lt.traj.y(t) = vals[1];
        lt.traj.u(t) = vals[2];
        if (with_modes) {
            double m = vals[3];
            if (m != std::floor(m) || m < 0) fail(file, "non-integer mode id");
            lt.traj.modes[static_cast<std::size_t>(t)] = static_cast<int>(m);
        }
    }
    return lt;
}

void save_partition(const std::filesystem::path& file, const Partition& p) {
    auto out = open_out(file);
    out << "# partition n=" << p.states() << " r=" << p.clusters() << '\n';
    for (Index i = 0; i < p.states(); ++i) {
        if (i) out << ',';
        out << p.cluster_of(i);
    }
    out << '\n';
}

Partition load_partition(const std::filesystem::path& file) {
    auto in = open_in(file);
    auto kv = read_header(in, file, "partition");
    Index n = header_long(kv, "n", file);
    Index r = header_long(kv, "r", file);
    std::string line;
    if (!std::getline(in, line)) fail(file, "missing assignment line");
    auto vals = split_csv(line, file);
    if (static_cast<Index>(vals.size()) != n) fail(file, "assignment length mismatch");
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        double v = vals[static_cast<std::size_t>(i)];
        if (v != std::floor(v)) fail(file, "non-integer cluster id");
        assign[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    return Partition(r, std::move(assign));
}

void save_counts(const std::filesystem::path& file, const TransitionCounts& c) {
    auto out = open_out(file);
    out << "# counts n=" << c.states() << " N=" << c.total_steps << '\n';
    for (Index i = 0; i < c.states(); ++i) {
        for (Index j = 0; j < c.states(); ++j) {
            if (j) out << ',';
            out << c.pair_counts(i, j);
        }
        out << '\n';
    }
}

TransitionCounts load_counts(const std::filesystem::path& file) {
    auto in = open_in(file);
    auto kv = read_header(in, file, "counts");
    Index n = header_long(kv, "n", file);
    long N = header_long(kv, "N", file);
    Matrix M = read_matrix_rows(in, file, n, n);
    TransitionCounts c;
    c.pair_counts = IntMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            double v = M(i, j);
            if (v != std::floor(v) || v < 0) fail(file, "counts must be nonnegative integers");
            c.pair_counts(i, j) = static_cast<std::int64_t>(v);
        }
    c.visit_counts = c.pair_counts.rowwise().sum();
    c.total_steps = N;
    if (c.pair_counts.sum() != N) fail(file, "pair counts do not sum to N");
    return c;
}

void save_model(const std::filesystem::path& file, const JumpModel& m) {
    auto out = open_out(file);
    out << "# model n=" << m.modes() << " n_a=" << m.n_a << " n_c=" << m.n_c << '\n';
    for (Index i = 0; i < m.modes(); ++i) write_row(out, m.w.row(i));
}

JumpModel load_model(const std::filesystem::path& file) {
    auto in = open_in(file);
    auto kv = read_header(in, file, "model");
    Index n = header_long(kv, "n", file);
    Index n_a = header_long(kv, "n_a", file);
    Index n_c = header_long(kv, "n_c", file);
    Matrix w = read_matrix_rows(in, file, n, n_a + n_c);
    return JumpModel(n_a, n_c, std::move(w));
}

void save_reduced(const std::filesystem::path& rows_file,
                  const std::filesystem::path& partition_file, const ReducedModel& m) {
    save_partition(partition_file, m.partition);
    auto out = open_out(rows_file);
    out << "# cluster_rows r=" << m.partition.clusters() << " n=" << m.partition.states()
        << " N=" << m.provenance.total_steps << '\n';
    for (Index k = 0; k < m.cluster_rows.rows(); ++k)
        write_row(out, m.cluster_rows.row(k));
}

ReducedModel load_reduced(const std::filesystem::path& rows_file,
                          const std::filesystem::path& partition_file) {
    Partition part = load_partition(partition_file);
    auto in = open_in(rows_file);
    auto kv = read_header(in, rows_file, "cluster_rows");
    Index r = header_long(kv, "r", rows_file);
    Index n = header_long(kv, "n", rows_file);
    long N = header_long(kv, "N", rows_file);
    if (r != part.clusters() || n != part.states())
        fail(rows_file, "cluster rows do not match the partition file");
    Matrix rows = read_matrix_rows(in, rows_file, r, n);
    for (Index k = 0; k < r; ++k) {
        double dev = std::abs(rows.row(k).sum() - 1.0);
        if (dev >= 1e-6) fail(rows_file, "cluster row " + std::to_string(k) + " not stochastic");
        if (dev > kRowSumTol) rows.row(k) /= rows.row(k).sum();
    }
    Matrix dense(n, n);
    for (Index i = 0; i < n; ++i) dense.row(i) = rows.row(part.cluster_of(i));
    return ReducedModel{std::move(part), std::move(rows), StochasticMatrix(std::move(dense)),
                        ReducedProvenance{N, std::nullopt}};
}

namespace {

nlohmann::json encode_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double decode_double(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "nan") return std::nan("");
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::invalid_argument("bound report: unrecognized numeric string '" + s + "'");
    }
    return j.get<double>();
}

}  // namespace

nlohmann::json bound_report_to_json(const BoundReport& rep) {
    nlohmann::json j;
    j["name"] = rep.name;
    j["value"] = encode_double(rep.value);
    j["applicable"] = rep.applicable;
    j["vacuous"] = rep.vacuous;
    j["note"] = rep.note;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [k, v] : rep.inputs) inputs[k] = encode_double(v);
    j["inputs"] = inputs;
    return j;
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
    BoundReport rep;
    rep.name = j.at("name").get<std::string>();
    rep.value = decode_double(j.at("value"));
    rep.applicable = j.at("applicable").get<bool>();
    rep.vacuous = j.at("vacuous").get<bool>();
    rep.note = j.value("note", "");
    for (const auto& [k, v] : j.at("inputs").items()) rep.inputs[k] = decode_double(v);
    return rep;
}

void save_bound_report(const std::filesystem::path& file, const BoundReport& rep) {
    auto out = open_out(file);
    out << bound_report_to_json(rep).dump(2) << '\n';
}

}  // namespace mmr
