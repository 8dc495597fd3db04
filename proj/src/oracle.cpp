#include "ctraj/oracle.hpp"

#include <fftw3.h>
#include <json.hpp>

#include <cstdio>
#include <mutex>
#include <numbers>

namespace ctraj {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class FftPlan {
public:
    FftPlan(const GridSpec& g, Complex* data, int sign) {
        std::lock_guard lock(planner_mutex());
        auto* p = reinterpret_cast<fftw_complex*>(data);
        plan_ = g.dim() == 1 ? fftw_plan_dft_1d(g.n[0], p, p, sign, FFTW_ESTIMATE)
                             : fftw_plan_dft_2d(g.n[0], g.n[1], p, p, sign, FFTW_ESTIMATE);
        if (!plan_) throw Error(ErrorCode::InvalidArgument, "FFTW planning failed");
    }
    ~FftPlan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    void run() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

std::vector<double> wavenumbers(int n, double dx) {
    std::vector<double> k(n);
    const double dk = 2.0 * std::numbers::pi / (n * dx);
    for (int j = 0; j < n; ++j) k[j] = dk * (j < n / 2 ? j : j - n);
    return k;
}

void check_grid(const GridSpec& g) {
    if (g.dim() < 1 || g.dim() > 2) throw Error(ErrorCode::DimensionMismatch, "oracle grids are 1D or 2D");
    if (g.lo.size() != g.dim() || g.hi.size() != g.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "grid bounds do not match grid dimension");
    }
    for (int a = 0; a < g.dim(); ++a) {
        if (g.n[a] < 2 || (g.n[a] & (g.n[a] - 1)) != 0) {
            throw Error(ErrorCode::InvalidArgument, "grid point counts must be powers of two");
        }
        if (!(g.hi[a] > g.lo[a])) throw Error(ErrorCode::InvalidArgument, "grid bounds must satisfy lo < hi");
    }
}

}  // namespace

std::vector<double> GridSpec::axis(int a) const {
    std::vector<double> x(n[a]);
    for (int k = 0; k < n[a]; ++k) x[k] = lo[a] + k * dx(a);
    return x;
}

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int v : n) s *= static_cast<std::size_t>(v);
    return s;
}

double GridWaveFunction::norm() const {
    double s = 0.0;
    for (const auto& z : amp) s += std::norm(z);
    double cell = 1.0;
    for (int a = 0; a < grid.dim(); ++a) cell *= grid.dx(a);
    return std::sqrt(s * cell);
}

GridWaveFunction packet_on_grid(const GaussianPacket& packet, const GridSpec& grid) {
    check_grid(grid);
    if (packet.dimension() != grid.dim()) throw Error(ErrorCode::DimensionMismatch, "packet and grid dimension differ");
    const RVector sig = packet.sigma();
    for (int a = 0; a < grid.dim(); ++a) {
        if (sig[a] / grid.dx(a) < 16.0) {
            throw Error(ErrorCode::GridTooCoarse, "grid has " + std::to_string(sig[a] / grid.dx(a)) +
                                                      " points per packet sigma on axis " + std::to_string(a) +
                                                      " (need 16)");
        }
        if (packet.x0[a] - 5.0 * sig[a] < grid.lo[a] || packet.x0[a] + 5.0 * sig[a] > grid.hi[a]) {
            throw Error(ErrorCode::PacketOutOfBounds, "packet centre is closer than 5 sigma to the grid boundary");
        }
    }
    GridWaveFunction psi;
    psi.grid = grid;
    psi.hbar = packet.hbar;
    psi.masses = packet.masses;
    psi.sigma = sig;
    psi.amp.resize(grid.size());
    const auto x0 = grid.axis(0);
    if (grid.dim() == 1) {
        for (std::size_t k = 0; k < x0.size(); ++k) {
            const double x[1] = {x0[k]};
            psi.amp[k] = packet.psi_real(x);
        }
    } else {
        const auto x1 = grid.axis(1);
        for (std::size_t i = 0; i < x0.size(); ++i) {
            for (std::size_t j = 0; j < x1.size(); ++j) {
                const double x[2] = {x0[i], x1[j]};
                psi.amp[i * x1.size() + j] = packet.psi_real(x);
            }
        }
    }
    return psi;
}

GridWaveFunction split_step_propagate(GridWaveFunction psi, const PotentialModel& model, double T, int n_steps) {
    const auto& g = psi.grid;
    check_grid(g);
    if (model.dimension() != g.dim()) throw Error(ErrorCode::DimensionMismatch, "potential and grid dimension differ");
    if (n_steps < 1) throw Error(ErrorCode::InvalidArgument, "n_steps must be positive");
    if (T == 0.0) return psi;
    const double dt = T / n_steps;
    const double hbar = psi.hbar;
    const std::size_t size = g.size();

    std::vector<Complex> half_v(size), kin(size);
    std::vector<char> edge(size, 0);
    const auto xa = g.axis(0);
    const auto ka = wavenumbers(g.n[0], g.dx(0));
    const double sig0 = psi.sigma.size() ? psi.sigma[0] : 0.0;
    auto near_edge = [&](double x, int a, double sig) { return x - g.lo[a] < 2.0 * sig || g.hi[a] - x < 2.0 * sig; };
    if (g.dim() == 1) {
        for (int i = 0; i < g.n[0]; ++i) {
            const double x[1] = {xa[i]};
            half_v[i] = std::exp(-kI * model.value_real(x) * (0.5 * dt / hbar));
            kin[i] = std::exp(-kI * hbar * ka[i] * ka[i] * dt / (2.0 * psi.masses[0])) / static_cast<double>(size);
            edge[i] = near_edge(xa[i], 0, sig0);
        }
    } else {
        const auto xb = g.axis(1);
        const auto kb = wavenumbers(g.n[1], g.dx(1));
        const double sig1 = psi.sigma.size() > 1 ? psi.sigma[1] : 0.0;
        for (int i = 0; i < g.n[0]; ++i) {
            for (int j = 0; j < g.n[1]; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i) * g.n[1] + j;
                const double x[2] = {xa[i], xb[j]};
                half_v[idx] = std::exp(-kI * model.value_real(x) * (0.5 * dt / hbar));
                const double e = ka[i] * ka[i] / psi.masses[0] + kb[j] * kb[j] / psi.masses[1];
                kin[idx] = std::exp(-kI * hbar * e * dt / 2.0) / static_cast<double>(size);
                edge[idx] = near_edge(xa[i], 0, sig0) || near_edge(xb[j], 1, sig1);
            }
        }
    }

    Complex* data = psi.amp.data();
    const FftPlan fwd(g, data, FFTW_FORWARD);
    const FftPlan bwd(g, data, FFTW_BACKWARD);
    for (std::size_t k = 0; k < size; ++k) data[k] *= half_v[k];
    for (int s = 0; s < n_steps; ++s) {
        fwd.run();
        for (std::size_t k = 0; k < size; ++k) data[k] *= kin[k];
        bwd.run();
        // Adjacent half potential steps are fused; the last one is a true half step.
        double total = 0.0, near = 0.0;
        const bool last = s + 1 == n_steps;
        for (std::size_t k = 0; k < size; ++k) {
            data[k] *= last ? half_v[k] : half_v[k] * half_v[k];
            const double p = std::norm(data[k]);
            total += p;
            if (edge[k]) near += p;
        }
        if (near > 1e-8 * total) {
            throw Error(ErrorCode::BoundaryContamination,
                        "wave function reached the grid boundary at t = " + std::to_string(psi.t + (s + 1) * dt));
        }
    }
    psi.t += T;
    return psi;
}

namespace {

// Coefficients c_j of psi(x) = sum_j c_j exp(i k_j (x - lo)).
struct Spectrum {
    GridSpec grid;
    std::vector<Complex> c;
    std::vector<double> k0, k1;

    explicit Spectrum(const GridWaveFunction& psi) : grid(psi.grid), c(psi.amp) {
        const FftPlan fwd(grid, c.data(), FFTW_FORWARD);
        fwd.run();
        const double inv = 1.0 / static_cast<double>(grid.size());
        for (auto& z : c) z *= inv;
        k0 = wavenumbers(grid.n[0], grid.dx(0));
        if (grid.dim() == 2) k1 = wavenumbers(grid.n[1], grid.dx(1));
    }

    // phases e^{i k_j s}; the Nyquist mode is split symmetrically (cosine)
    static std::vector<Complex> phases(const std::vector<double>& k, double s) {
        const int n = static_cast<int>(k.size());
        std::vector<Complex> e(n);
        for (int j = 0; j < n; ++j) e[j] = std::exp(kI * k[j] * s);
        e[n / 2] = std::cos(k[n / 2] * s);
        return e;
    }

    Complex operator()(const RVector& x) const {
        const auto e0 = phases(k0, x[0] - grid.lo[0]);
        if (grid.dim() == 1) {
            Complex s = 0.0;
            for (std::size_t j = 0; j < e0.size(); ++j) s += c[j] * e0[j];
            return s;
        }
        const auto e1 = phases(k1, x[1] - grid.lo[1]);
        Complex s = 0.0;
        const std::size_t n1 = e1.size();
        for (std::size_t i = 0; i < e0.size(); ++i) {
            Complex row = 0.0;
            for (std::size_t j = 0; j < n1; ++j) row += c[i * n1 + j] * e1[j];
            s += e0[i] * row;
        }
        return s;
    }
};

}  // namespace

Complex interpolate(const GridWaveFunction& psi, const RVector& x) {
    if (x.size() != psi.grid.dim()) throw Error(ErrorCode::DimensionMismatch, "interpolation point dimension");
    return Spectrum(psi)(x);
}

Complex inner_product(const GridWaveFunction& a, const GridWaveFunction& b) {
    if (a.grid.n != b.grid.n || a.grid.lo != b.grid.lo || a.grid.hi != b.grid.hi) {
        throw Error(ErrorCode::DimensionMismatch, "inner product needs identical grids");
    }
    Complex s = 0.0;
    for (std::size_t k = 0; k < a.amp.size(); ++k) s += std::conj(a.amp[k]) * b.amp[k];
    double cell = 1.0;
    for (int d = 0; d < a.grid.dim(); ++d) cell *= a.grid.dx(d);
    return s * cell;
}

namespace {

bool caustic_target(const TargetResult& t) {
    for (const auto& b : t.branches) {
        if (b.classification == BranchClass::CausticAdjacent) return true;
    }
    return false;
}

}  // namespace

Comparison compare(const SemiclassicalField& field, const std::vector<Complex>& reference,
                   double transition_threshold) {
    if (reference.size() != field.targets.size()) {
        throw Error(ErrorCode::DimensionMismatch, "reference and field sizes differ");
    }
    Comparison c;
    double num = 0.0, den = 0.0, peak = 0.0;
    for (const auto& r : reference) peak = std::max(peak, std::abs(r));
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto& t = field.targets[i];
        if (t.empty || caustic_target(t)) {
            c.excluded.push_back(i);
            continue;
        }
        const double e = std::abs(t.total - reference[i]);
        num += e * e;
        den += std::norm(reference[i]);
        c.max_pointwise = std::max(c.max_pointwise, e);
        if (e > transition_threshold * peak) c.transitions.push_back(i);
        ++c.used;
    }
    c.relative_L2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return c;
}

Comparison compare(const SemiclassicalField& field, const GridWaveFunction& psi, double transition_threshold) {
    const Spectrum spec(psi);
    std::vector<Complex> ref(field.targets.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = spec(field.targets[i].X);
    return compare(field, ref, transition_threshold);
}

Complex free_particle_exact(double X, const GaussianPacket& packet, double T) {
    if (packet.dimension() != 1) throw Error(ErrorCode::DimensionMismatch, "closed form is 1D");
    const double m = packet.masses[0], hbar = packet.hbar;
    const double x0 = packet.x0[0], p0 = packet.p0[0];
    const Complex a = 0.5 * m * packet.width(0, 0);
    const Complex den = 1.0 + 2.0 * kI * a * T / m;
    const double y = X - x0 - p0 * T / m;
    return std::exp(-a * y * y / (hbar * den) + kI * p0 * y / hbar + kI * p0 * p0 * T / (2.0 * hbar * m)) /
           std::sqrt(den);
}

Complex harmonic_exact(double X, double k, const GaussianPacket& packet, double T) {
    if (packet.dimension() != 1) throw Error(ErrorCode::DimensionMismatch, "closed form is 1D");
    if (k <= 0.0) throw Error(ErrorCode::InvalidArgument, "harmonic closed form needs k > 0");
    const double m = packet.masses[0], hbar = packet.hbar;
    const double x0 = packet.x0[0], p0 = packet.p0[0];
    const double w = std::sqrt(k / m);
    const Complex s2 = kI * m * packet.width(0, 0);  // S_init''
    auto u = [&](double t) { return std::cos(w * t) + s2 / (m * w) * std::sin(w * t); };
    // continuous log u along [0, T]
    const int steps = std::max(256, static_cast<int>(64.0 * w * std::abs(T)));
    Complex logu = 0.0;
    Complex prev = 1.0;
    for (int s = 1; s <= steps; ++s) {
        const Complex cur = u(T * s / steps);
        logu += std::log(cur / prev);
        prev = cur;
    }
    const Complex uT = u(T);
    const Complex udot = -w * std::sin(w * T) + s2 / m * std::cos(w * T);
    const Complex alpha = 0.5 * m * udot / uT;
    const double xt = x0 * std::cos(w * T) + p0 / (m * w) * std::sin(w * T);
    const double pt = p0 * std::cos(w * T) - m * w * x0 * std::sin(w * T);
    const double gamma = 0.5 * (pt * xt - p0 * x0);
    const double y = X - xt;
    return std::exp(kI / hbar * (alpha * y * y + pt * y + gamma) - 0.5 * logu);
}

Complex harmonic_exact_separable(const RVector& X, const RVector& k, const GaussianPacket& packet, double T) {
    const int d = packet.dimension();
    if (X.size() != d || k.size() != d) throw Error(ErrorCode::DimensionMismatch, "separable closed form dimension");
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i != j && packet.width(i, j) != Complex(0.0)) {
                throw Error(ErrorCode::InvalidArgument, "separable closed form needs a diagonal width");
            }
        }
    }
    Complex psi = 1.0;
    for (int i = 0; i < d; ++i) {
        GaussianPacket p1;
        p1.x0 = RVector::Constant(1, packet.x0[i]);
        p1.p0 = RVector::Constant(1, packet.p0[i]);
        p1.width = CMatrix::Constant(1, 1, packet.width(i, i));
        p1.hbar = packet.hbar;
        p1.masses = RVector::Constant(1, packet.masses[i]);
        psi *= k[i] > 0.0 ? harmonic_exact(X[i], k[i], p1, T) : free_particle_exact(X[i], p1, T);
    }
    return psi;
}

std::string grid_metadata_json(const GridWaveFunction& psi) {
    nlohmann::json j;
    j["dimension"] = psi.grid.dim();
    j["lo"] = std::vector<double>(psi.grid.lo.data(), psi.grid.lo.data() + psi.grid.lo.size());
    j["hi"] = std::vector<double>(psi.grid.hi.data(), psi.grid.hi.data() + psi.grid.hi.size());
    j["n_points"] = psi.grid.n;
    j["hbar"] = psi.hbar;
    j["masses"] = std::vector<double>(psi.masses.data(), psi.masses.data() + psi.masses.size());
    j["t"] = psi.t;
    j["norm"] = psi.norm();
    return j.dump(2);
}

std::string grid_to_csv(const GridWaveFunction& psi) {
    std::string out = psi.grid.dim() == 1 ? "x,re,im\n" : "x,y,re,im\n";
    char buf[160];
    const auto xa = psi.grid.axis(0);
    if (psi.grid.dim() == 1) {
        for (std::size_t i = 0; i < xa.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", xa[i], psi.amp[i].real(), psi.amp[i].imag());
            out += buf;
        }
    } else {
        const auto xb = psi.grid.axis(1);
        for (std::size_t i = 0; i < xa.size(); ++i) {
            for (std::size_t j = 0; j < xb.size(); ++j) {
                const auto& z = psi.amp[i * xb.size() + j];
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", xa[i], xb[j], z.real(), z.imag());
                out += buf;
            }
        }
    }
    return out;
}

}  // namespace ctraj
