#include "ctraj/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ctraj {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::vector<double> numbers(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) config_error(where + ": '" + tok + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) config_error(where + ": empty value");
    return out;
}

double number(const std::string& text, const std::string& where) {
    const auto v = numbers(text, where);
    if (v.size() != 1) config_error(where + ": expected a single number");
    return v[0];
}

int integer(const std::string& text, const std::string& where) {
    const double v = number(text, where);
    if (v != std::floor(v) || std::abs(v) > 1e9) config_error(where + ": expected an integer");
    return static_cast<int>(v);
}

bool boolean(const std::string& text, const std::string& where) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    config_error(where + ": expected true/false");
}

RVector broadcast(const std::vector<double>& v, int d, const std::string& where) {
    if (v.size() == 1) return RVector::Constant(d, v[0]);
    if (static_cast<int>(v.size()) != d)
        config_error(where + ": expected 1 or " + std::to_string(d) + " values, got " + std::to_string(v.size()));
    return Eigen::Map<const RVector>(v.data(), d);
}

std::vector<int> broadcast_int(const std::vector<double>& v, int d, const std::string& where) {
    const RVector r = broadcast(v, d, where);
    std::vector<int> out(d);
    for (int i = 0; i < d; ++i) {
        if (r[i] != std::floor(r[i]) || r[i] < 1 || r[i] > 1e8) config_error(where + ": expected positive integers");
        out[i] = static_cast<int>(r[i]);
    }
    return out;
}

/// d values: diagonal; d*d values: row-major full matrix.
RMatrix matrix(const std::vector<double>& v, int d, const std::string& where) {
    if (static_cast<int>(v.size()) == d * d && d > 1) {
        RMatrix m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = v[i * d + j];
        return m;
    }
    return broadcast(v, d, where).asDiagonal();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const RVector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

std::string fmt(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

std::string fmt(const RMatrix& m) {
    std::string s;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += (s.empty() ? "" : " ") + fmt(m(i, j));
    return s;
}

/// Reads one section, rejecting keys outside `allowed` (empty: anything goes).
class Section {
public:
    Section(const pt::ptree& root, const std::string& name, std::set<std::string> allowed)
        : name_(name), present_(root.count(name) > 0) {
        if (!present_) return;
        for (const auto& [key, child] : root.get_child(name)) {
            if (!child.empty()) config_error("[" + name + "] " + key + ": nested keys are not allowed");
            if (!allowed.empty() && !allowed.count(key)) config_error("[" + name + "] unknown key '" + key + "'");
            values_[key] = child.data();
        }
    }

    bool present() const { return present_; }
    const std::map<std::string, std::string>& values() const { return values_; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

    template <class F>
    void get(const std::string& key, F&& assign) const {
        auto it = values_.find(key);
        if (it != values_.end()) assign(it->second, where(key));
    }

private:
    std::string name_;
    bool present_;
    std::map<std::string, std::string> values_;
};

PacketSpec read_packet(const Section& s, int d) {
    PacketSpec p;
    p.x0 = RVector::Zero(d);
    p.p0 = RVector::Zero(d);
    RMatrix re = RMatrix::Identity(d, d), im = RMatrix::Zero(d, d);
    s.get("x0", [&](auto& v, auto w) { p.x0 = broadcast(numbers(v, w), d, w); });
    s.get("p0", [&](auto& v, auto w) { p.p0 = broadcast(numbers(v, w), d, w); });
    s.get("omega_re", [&](auto& v, auto w) { re = matrix(numbers(v, w), d, w); });
    s.get("omega_im", [&](auto& v, auto w) { im = matrix(numbers(v, w), d, w); });
    p.omega = re.cast<Complex>() + kI * im.cast<Complex>();
    return p;
}

void write_packet(std::ostream& out, const std::string& name, const PacketSpec& p) {
    out << "[" << name << "]\n";
    out << "x0 = " << fmt(p.x0) << "\n";
    out << "p0 = " << fmt(p.p0) << "\n";
    out << "omega_re = " << fmt(RMatrix(p.omega.real())) << "\n";
    out << "omega_im = " << fmt(RMatrix(p.omega.imag())) << "\n\n";
}

}  // namespace

bool PacketSpec::operator==(const PacketSpec& o) const {
    return x0 == o.x0 && p0 == o.p0 && omega == o.omega;
}

bool RunConfig::operator==(const RunConfig& o) const {
    return potential == o.potential && dimension == o.dimension && potential_params == o.potential_params &&
           packet == o.packet && final_packet == o.final_packet && hbar == o.hbar && mass == o.mass && T == o.T &&
           method == o.method && order == o.order && targets_lo == o.targets_lo && targets_hi == o.targets_hi &&
           targets_n == o.targets_n && rtol == o.rtol && atol == o.atol && samples == o.samples &&
           continuation == o.continuation && box.re_lo == o.box.re_lo && box.re_hi == o.box.re_hi &&
           box.im_lo == o.box.im_lo && box.im_hi == o.box.im_hi && grid_n == o.grid_n && jitter == o.jitter &&
           seed == o.seed && shoot_tol == o.shoot_tol && max_iterations == o.max_iterations &&
           dedup_tol == o.dedup_tol && caustic_threshold == o.caustic_threshold && cutoff == o.cutoff &&
           oracle_enabled == o.oracle_enabled && oracle_lo == o.oracle_lo && oracle_hi == o.oracle_hi &&
           oracle_n == o.oracle_n && oracle_steps == o.oracle_steps &&
           transition_threshold == o.transition_threshold && output_dir == o.output_dir &&
           output_prefix == o.output_prefix;
}

RunConfig parse_config(std::istream& in) {
    pt::ptree root;
    try {
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        config_error(e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    static const std::set<std::string> sections{"potential", "packet", "final_packet", "run",
                                                "search",    "oracle", "output"};
    for (const auto& [name, child] : root) {
        if (!sections.count(name)) config_error("unknown section [" + name + "]");
        if (child.empty() && !child.data().empty()) config_error("key '" + name + "' outside any section");
    }

    RunConfig c;
    const Section pot(root, "potential", {});
    for (const auto& [key, value] : pot.values()) {
        if (key == "kind") {
            c.potential = value;
        } else if (key == "dimension") {
            c.dimension = integer(value, pot.where(key));
        } else {
            c.potential_params[key] = number(value, pot.where(key));
        }
    }
    try {
        c.potential = std::string(to_string(potential_kind_from_string(c.potential)));
    } catch (const Error& e) {
        config_error(std::string("[potential] kind: ") + e.what());
    }
    if (c.dimension < 1 || c.dimension > kMaxDim) config_error("[potential] dimension must be 1..3");
    const int d = c.dimension;

    c.packet = read_packet(Section(root, "packet", {"x0", "p0", "omega_re", "omega_im"}), d);
    const Section fin(root, "final_packet", {"x0", "p0", "omega_re", "omega_im"});
    if (fin.present()) c.final_packet = read_packet(fin, d);

    const Section run(root, "run", {"hbar", "mass", "T", "method", "order", "targets_lo", "targets_hi", "targets_n",
                                    "rtol", "atol", "samples", "continuation"});
    run.get("hbar", [&](auto& v, auto w) { c.hbar = number(v, w); });
    run.get("mass", [&](auto& v, auto w) { c.mass = number(v, w); });
    run.get("T", [&](auto& v, auto w) { c.T = number(v, w); });
    run.get("method", [&](auto& v, auto w) {
        try {
            c.method = method_from_string(v);
        } catch (const Error&) {
            config_error(w + ": expected wkb, bomca or classical_q");
        }
    });
    run.get("order", [&](auto& v, auto w) { c.order = integer(v, w); });
    c.targets_lo = RVector::Constant(d, -3.0);
    c.targets_hi = RVector::Constant(d, 3.0);
    c.targets_n.assign(d, d == 1 ? 61 : 21);
    run.get("targets_lo", [&](auto& v, auto w) { c.targets_lo = broadcast(numbers(v, w), d, w); });
    run.get("targets_hi", [&](auto& v, auto w) { c.targets_hi = broadcast(numbers(v, w), d, w); });
    run.get("targets_n", [&](auto& v, auto w) { c.targets_n = broadcast_int(numbers(v, w), d, w); });
    run.get("rtol", [&](auto& v, auto w) { c.rtol = number(v, w); });
    run.get("atol", [&](auto& v, auto w) { c.atol = number(v, w); });
    run.get("samples", [&](auto& v, auto w) { c.samples = integer(v, w); });
    run.get("continuation", [&](auto& v, auto w) { c.continuation = boolean(v, w); });

    const Section search(root, "search", {"re_lo", "re_hi", "im_lo", "im_hi", "grid_n", "jitter", "seed", "shoot_tol",
                                          "max_iterations", "dedup_tol", "caustic_threshold", "cutoff"});
    search.get("re_lo", [&](auto& v, auto w) { c.box.re_lo = number(v, w); });
    search.get("re_hi", [&](auto& v, auto w) { c.box.re_hi = number(v, w); });
    search.get("im_lo", [&](auto& v, auto w) { c.box.im_lo = number(v, w); });
    search.get("im_hi", [&](auto& v, auto w) { c.box.im_hi = number(v, w); });
    search.get("grid_n", [&](auto& v, auto w) { c.grid_n = integer(v, w); });
    search.get("jitter", [&](auto& v, auto w) { c.jitter = number(v, w); });
    search.get("seed", [&](auto& v, auto w) {
        char* end = nullptr;
        c.seed = std::strtoull(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size() || v[0] == '-') config_error(w + ": expected an unsigned integer");
    });
    search.get("shoot_tol", [&](auto& v, auto w) { c.shoot_tol = number(v, w); });
    search.get("max_iterations", [&](auto& v, auto w) { c.max_iterations = integer(v, w); });
    search.get("dedup_tol", [&](auto& v, auto w) { c.dedup_tol = number(v, w); });
    search.get("caustic_threshold", [&](auto& v, auto w) { c.caustic_threshold = number(v, w); });
    search.get("cutoff", [&](auto& v, auto w) { c.cutoff = number(v, w); });

    const Section oracle(root, "oracle", {"enabled", "lo", "hi", "n", "steps", "transition_threshold"});
    c.oracle_lo = RVector::Constant(d, -20.0);
    c.oracle_hi = RVector::Constant(d, 20.0);
    c.oracle_n.assign(d, d == 1 ? 1024 : 256);
    oracle.get("enabled", [&](auto& v, auto w) { c.oracle_enabled = boolean(v, w); });
    oracle.get("lo", [&](auto& v, auto w) { c.oracle_lo = broadcast(numbers(v, w), d, w); });
    oracle.get("hi", [&](auto& v, auto w) { c.oracle_hi = broadcast(numbers(v, w), d, w); });
    oracle.get("n", [&](auto& v, auto w) { c.oracle_n = broadcast_int(numbers(v, w), d, w); });
    oracle.get("steps", [&](auto& v, auto w) { c.oracle_steps = integer(v, w); });
    oracle.get("transition_threshold", [&](auto& v, auto w) { c.transition_threshold = number(v, w); });

    const Section output(root, "output", {"dir", "prefix"});
    output.get("dir", [&](auto& v, auto) { c.output_dir = v; });
    output.get("prefix", [&](auto& v, auto) { c.output_prefix = v; });

    validate(c);
    return c;
}

RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open config file '" + path + "'");
    return parse_config(in);
}

void validate(const RunConfig& c) {
    const int d = c.dimension;
    auto positive = [](double v, const std::string& what) {
        if (!(v > 0.0) || !std::isfinite(v)) config_error(what + " must be positive");
    };
    positive(c.hbar, "[run] hbar");
    positive(c.mass, "[run] mass");
    if (!(c.T >= 0.0) || !std::isfinite(c.T)) config_error("[run] T must be non-negative");
    positive(c.rtol, "[run] rtol");
    positive(c.atol, "[run] atol");
    positive(c.shoot_tol, "[search] shoot_tol");
    positive(c.dedup_tol, "[search] dedup_tol");
    positive(c.caustic_threshold, "[search] caustic_threshold");
    positive(c.cutoff, "[search] cutoff");
    positive(c.transition_threshold, "[oracle] transition_threshold");
    if (c.jitter < 0.0) config_error("[search] jitter must be non-negative");
    if (c.samples < 16) config_error("[run] samples must be at least 16");
    if (c.grid_n < 1) config_error("[search] grid_n must be positive");
    if (c.max_iterations < 1) config_error("[search] max_iterations must be positive");
    if (c.oracle_steps < 1) config_error("[oracle] steps must be positive");
    if (c.box.re_lo > c.box.re_hi || c.box.im_lo > c.box.im_hi) config_error("[search] box bounds are inverted");
    if (c.order < 1) config_error("[run] order must be at least 1");

    check_capability(c.method, c.order, d);

    for (int i = 0; i < d; ++i) {
        if (c.targets_hi[i] < c.targets_lo[i]) config_error("[run] targets_hi below targets_lo");
        if (c.oracle_hi[i] <= c.oracle_lo[i]) config_error("[oracle] hi must exceed lo");
        const int n = c.oracle_n[i];
        if (n < 16 || (n & (n - 1))) config_error("[oracle] n must be a power of two >= 16");
    }
    if (c.oracle_enabled && d > 2) config_error("[oracle] grid solver is limited to d <= 2");
    try {
        (void)c.model();
        (void)c.initial_packet();
        if (c.final_packet) (void)c.final_packet_or_throw();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        config_error(e.what());
    }
}

PotentialModel RunConfig::model() const {
    return PotentialModel(potential_kind_from_string(potential), potential_params, dimension);
}

GaussianPacket RunConfig::initial_packet() const {
    return GaussianPacket::with_scalar_mass(packet.x0, packet.p0, packet.omega, hbar, mass);
}

GaussianPacket RunConfig::final_packet_or_throw() const {
    if (!final_packet) config_error("[final_packet] section is required for this command");
    return GaussianPacket::with_scalar_mass(final_packet->x0, final_packet->p0, final_packet->omega, hbar, mass);
}

std::vector<RVector> RunConfig::targets() const { return target_grid(targets_lo, targets_hi, targets_n); }

DynamicsOptions RunConfig::dynamics_options() const {
    DynamicsOptions o;
    o.ode.rtol = rtol;
    o.ode.atol = atol;
    o.samples = static_cast<std::size_t>(samples);
    o.caustic_threshold = caustic_threshold;
    return o;
}

AssemblyOptions RunConfig::assembly_options() const {
    AssemblyOptions o;
    o.method = method;
    o.order = order;
    o.search.box = box;
    o.search.grid_n = grid_n;
    o.search.dedup_tol = dedup_tol;
    o.search.jitter = jitter;
    o.search.seed = seed;
    o.shooting.tol = shoot_tol;
    o.shooting.max_iterations = max_iterations;
    o.dynamics = dynamics_options();
    o.cutoff = cutoff;
    o.caustic_threshold = caustic_threshold;
    return o;
}

GridSpec RunConfig::oracle_grid() const { return GridSpec{oracle_lo, oracle_hi, oracle_n}; }

std::string to_ini(const RunConfig& c) {
    std::ostringstream out;
    out << "[potential]\nkind = " << c.potential << "\ndimension = " << c.dimension << "\n";
    for (const auto& [k, v] : c.potential_params) out << k << " = " << fmt(v) << "\n";
    out << "\n";
    write_packet(out, "packet", c.packet);
    if (c.final_packet) write_packet(out, "final_packet", *c.final_packet);
    out << "[run]\n"
        << "hbar = " << fmt(c.hbar) << "\nmass = " << fmt(c.mass) << "\nT = " << fmt(c.T) << "\n"
        << "method = " << to_string(c.method) << "\norder = " << c.order << "\n"
        << "targets_lo = " << fmt(c.targets_lo) << "\ntargets_hi = " << fmt(c.targets_hi) << "\n"
        << "targets_n = " << fmt(c.targets_n) << "\n"
        << "rtol = " << fmt(c.rtol) << "\natol = " << fmt(c.atol) << "\nsamples = " << c.samples << "\n"
        << "continuation = " << (c.continuation ? "true" : "false") << "\n\n";
    out << "[search]\n"
        << "re_lo = " << fmt(c.box.re_lo) << "\nre_hi = " << fmt(c.box.re_hi) << "\n"
        << "im_lo = " << fmt(c.box.im_lo) << "\nim_hi = " << fmt(c.box.im_hi) << "\n"
        << "grid_n = " << c.grid_n << "\njitter = " << fmt(c.jitter) << "\nseed = " << c.seed << "\n"
        << "shoot_tol = " << fmt(c.shoot_tol) << "\nmax_iterations = " << c.max_iterations << "\n"
        << "dedup_tol = " << fmt(c.dedup_tol) << "\ncaustic_threshold = " << fmt(c.caustic_threshold) << "\n"
        << "cutoff = " << fmt(c.cutoff) << "\n\n";
    out << "[oracle]\n"
        << "enabled = " << (c.oracle_enabled ? "true" : "false") << "\n"
        << "lo = " << fmt(c.oracle_lo) << "\nhi = " << fmt(c.oracle_hi) << "\nn = " << fmt(c.oracle_n) << "\n"
        << "steps = " << c.oracle_steps << "\ntransition_threshold = " << fmt(c.transition_threshold) << "\n\n";
    out << "[output]\ndir = " << c.output_dir << "\nprefix = " << c.output_prefix << "\n";
    return out.str();
}

}  // namespace ctraj
