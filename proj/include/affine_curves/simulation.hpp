#pragma once

// Path simulation of the full state under P or Q.
//
// Gaussian block: exact joint transition of (r_s, theta, zeta, int r_s, int zeta).
// Square-root block: full-truncation Euler.
// Jump spreads: exact exponential decay; jump times by inverting the
// integrated intensity, taken linear in time within each step, against
// unit-exponential clocks. Jump sizes are exponential with mean mean_jump.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "affine_curves/error.hpp"
#include "affine_curves/linear_gaussian.hpp"
#include "affine_curves/model.hpp"
#include "affine_curves/rng.hpp"

namespace affine_curves {

inline constexpr double kOracleDt = 1.0 / 1000.0;
inline constexpr double kPanelDt = 1.0 / 252.0;

/// Worker count from AFFINE_CURVES_THREADS, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("AFFINE_CURVES_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over contiguous chunks of [0, n) on up to worker_count() threads.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

struct JumpEvent {
    double time = 0.0;
    int coordinate = idx::lambda;
    double size = 0.0;
};

/// Jump spreads started at `start` for one borrower cohort, with running integrals.
struct JumpTrack {
    double start = 0.0;
    double lambda = 0.0;
    double phi = 0.0;
    double int_lambda = 0.0;
    double int_phi = 0.0;
    double clock_lambda = 0.0;
    double clock_phi = 0.0;
    bool track_default = false;
    double default_clock = 0.0;
    double default_time = std::numeric_limits<double>::quiet_NaN();
    double default_int_r = 0.0;  // int r_s from path start to the default time

    bool defaulted() const { return !std::isnan(default_time); }
};

struct PathState {
    double time = 0.0;
    Eigen::Vector3d gauss = Eigen::Vector3d::Zero();  // r_s, theta, zeta
    Eigen::Vector3d cir = Eigen::Vector3d::Zero();    // xi, eta, nu
    double int_r = 0.0;
    double int_zeta = 0.0;
    std::vector<JumpTrack> tracks;

    StateVector state(std::size_t track = 0) const {
        StateVector x;
        x.r_s = gauss[0];
        x.theta_s = gauss[1];
        x.zeta = gauss[2];
        if (track < tracks.size()) {
            x.lambda = tracks[track].lambda;
            x.phi = tracks[track].phi;
        }
        // Full truncation: the auxiliary Euler variable may dip below zero, the
        // reported factor is its positive part.
        x.xi = std::max(cir[0], 0.0);
        x.eta = std::max(cir[1], 0.0);
        x.nu = std::max(cir[2], 0.0);
        return x;
    }
};

class PathEngine {
public:
    PathEngine(const ModelParams& p, Measure measure, double dt_max) : dt_max_(dt_max) {
        if (!(dt_max > 0.0)) throw InputError("dt must be > 0");
        require_valid(p);
        const ReducedDynamics d = reduced_dynamics(p, measure);
        if (d.K.topRightCorner<3, 3>().norm() != 0.0 || d.K.bottomLeftCorner<3, 3>().norm() != 0.0)
            throw ModelError("simulation requires block-diagonal drift");
        Kg_ = d.K.topLeftCorner<3, 3>();
        cg_ = d.c.head<3>();
        Sg_ = d.Sigma.topLeftCorner<3, 3>();
        Kc_ = d.K.bottomRightCorner<3, 3>();
        cc_ = d.c.tail<3>();
        sc_ = d.Sigma.bottomRightCorner<3, 3>().diagonal();
        beta_lambda_ = p.beta_lambda;
        beta_phi_ = p.beta_phi;
        mean_jump_ = p.mean_jump;
    }

    double dt_max() const { return dt_max_; }

    PathState start(const StateVector& x0, double t0, Rng& rng, bool track_default = false) const {
        PathState s;
        s.time = t0;
        s.gauss << x0.r_s, x0.theta_s, x0.zeta;
        s.cir << x0.xi, x0.eta, x0.nu;
        add_track(s, rng, track_default);
        s.tracks.back().lambda = x0.lambda;
        s.tracks.back().phi = x0.phi;
        return s;
    }

    /// Starts a fresh cohort (lambda = phi = 0) at the current time.
    void add_track(PathState& s, Rng& rng, bool track_default = false) const {
        JumpTrack t;
        t.start = s.time;
        t.clock_lambda = rng.exp1();
        t.clock_phi = rng.exp1();
        t.track_default = track_default;
        if (track_default) t.default_clock = rng.exp1();
        s.tracks.push_back(t);
    }

    /// Advances to `to` in equal steps no longer than dt_max. After each step
    /// obs(u0, int_r0, int_lambda0, s) sees the step start time and the
    /// first cohort's integrals at that time.
    template <typename Obs>
    void advance(PathState& s, double to, Rng& rng, std::vector<JumpEvent>* events, Obs&& obs) {
        const double len = to - s.time;
        if (len <= 0.0) return;
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt_max_ - 1e-9)));
        const double h = len / static_cast<double>(n);
        const Step& st = step_data(h);
        for (std::size_t i = 0; i < n; ++i) {
            const double u0 = s.time, r0 = s.int_r;
            const double l0 = s.tracks.empty() ? 0.0 : s.tracks[0].int_lambda;
            step(s, st, rng, events);
            s.time = (i + 1 == n) ? to : s.time + h;
            obs(u0, r0, l0, s);
        }
    }

    void advance(PathState& s, double to, Rng& rng, std::vector<JumpEvent>* events = nullptr) {
        advance(s, to, rng, events, [](double, double, double, const PathState&) {});
    }

private:
    struct Step {
        double h = 0.0;
        Eigen::Matrix<double, 5, 5> F;
        Eigen::Matrix<double, 5, 1> C;
        Eigen::Matrix<double, 5, 5> L;
        double decay_lambda = 1.0;
        double decay_phi = 1.0;
    };

    const Step& step_data(double h) {
        auto it = cache_.find(h);
        if (it != cache_.end()) return it->second;
        Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Zero();
        M.topLeftCorner<3, 3>() = Kg_;
        M(3, 0) = -1.0;
        M(4, 2) = -1.0;
        Eigen::Matrix<double, 5, 1> c = Eigen::Matrix<double, 5, 1>::Zero();
        c.head<3>() = cg_;
        Eigen::Matrix<double, 5, 5> GG = Eigen::Matrix<double, 5, 5>::Zero();
        GG.topLeftCorner<3, 3>() = Sg_ * Sg_.transpose();
        const auto tr = linear_transition<5>(M, c, GG, h);
        Step st;
        st.h = h;
        st.F = tr.F;
        st.C = tr.C;
        st.L = psd_factor<5>(tr.Cov);
        st.decay_lambda = std::exp(-beta_lambda_ * h);
        st.decay_phi = std::exp(-beta_phi_ * h);
        return cache_.emplace(h, st).first->second;
    }

    /// Integrated intensity over [0, s] for an intensity linear from a to b on [0, h].
    static double hazard(double a, double b, double h, double s) { return a * s + 0.5 * (b - a) * s * s / h; }

    static double hazard_inverse(double a, double b, double h, double target) {
        const double slope = (b - a) / h;
        if (std::abs(slope) * target < 1e-300 || std::abs(slope) < 1e-14 * std::max(a, b))
            return target / std::max(a, 1e-300);
        const double disc = std::max(0.0, a * a + 2.0 * slope * target);
        return 2.0 * target / (a + std::sqrt(disc));
    }

    /// Decays a spread over `len` and returns its integral; checks the default clock.
    void decay(double& level, double& integral, double beta, double len, double decay_full, JumpTrack* tr,
               double seg_start, const Step& st, const PathState& s, double int_r_before, double int_r_after) const {
        const double e = (decay_full > 0.0) ? decay_full : std::exp(-beta * len);
        const double inc = level * (1.0 - e) / beta;
        if (tr && !tr->defaulted() && integral + inc >= tr->default_clock && level > 0.0) {
            const double need = tr->default_clock - integral;
            const double arg = std::max(1.0 - beta * need / level, std::numeric_limits<double>::min());
            const double u = seg_start + std::min(len, -std::log(arg) / beta);
            tr->default_time = s.time + u;
            tr->default_int_r = int_r_before + (int_r_after - int_r_before) * (u / st.h);
        }
        integral += inc;
        level *= e;
    }

    void evolve_spread(JumpTrack& tr, bool is_lambda, double a, double b, const Step& st, Rng& rng,
                       const PathState& s, double int_r_before, double int_r_after,
                       std::vector<JumpEvent>* events) const {
        double& level = is_lambda ? tr.lambda : tr.phi;
        double& integral = is_lambda ? tr.int_lambda : tr.int_phi;
        double& clock = is_lambda ? tr.clock_lambda : tr.clock_phi;
        const double beta = is_lambda ? beta_lambda_ : beta_phi_;
        const double full = is_lambda ? st.decay_lambda : st.decay_phi;
        JumpTrack* dflt = (is_lambda && tr.track_default) ? &tr : nullptr;
        const double h = st.h;
        double pos = 0.0;
        double used = 0.0;  // hazard consumed up to pos
        const double total = hazard(a, b, h, h);
        while (true) {
            if (clock > total - used) {
                clock -= total - used;
                decay(level, integral, beta, h - pos, pos == 0.0 ? full : -1.0, dflt, pos, st, s, int_r_before,
                      int_r_after);
                return;
            }
            const double target = used + clock;
            const double sj = std::clamp(hazard_inverse(a, b, h, target), pos, h);
            decay(level, integral, beta, sj - pos, -1.0, dflt, pos, st, s, int_r_before, int_r_after);
            const double size = mean_jump_ * rng.exp1();
            level += size;
            if (events) events->push_back({s.time + sj, is_lambda ? idx::lambda : idx::phi, size});
            clock = rng.exp1();
            used = target;
            pos = sj;
        }
    }

    void step(PathState& s, const Step& st, Rng& rng, std::vector<JumpEvent>* events) const {
        Eigen::Matrix<double, 5, 1> y;
        y << s.gauss, 0.0, 0.0;
        Eigen::Matrix<double, 5, 1> z;
        for (int i = 0; i < 5; ++i) z[i] = rng.normal();
        y = st.F * y + st.C + st.L * z;
        const double int_r_before = s.int_r;
        s.gauss = y.head<3>();
        s.int_r += y[3];
        s.int_zeta += y[4];

        const Eigen::Vector3d plus = s.cir.cwiseMax(0.0);
        const double sq = std::sqrt(st.h);
        Eigen::Vector3d next = s.cir + (cc_ - Kc_ * plus) * st.h;
        for (int j = 0; j < 3; ++j) next[j] += sc_[j] * std::sqrt(plus[j]) * sq * rng.normal();
        const double xi0 = plus[0], xi1 = std::max(next[0], 0.0);
        const double nu0 = plus[2], nu1 = std::max(next[2], 0.0);
        s.cir = next;

        for (auto& tr : s.tracks) {
            evolve_spread(tr, true, xi0, xi1, st, rng, s, int_r_before, s.int_r, events);
            evolve_spread(tr, false, nu0, nu1, st, rng, s, int_r_before, s.int_r, events);
        }
    }

    double dt_max_;
    Eigen::Matrix3d Kg_, Sg_, Kc_;
    Eigen::Vector3d cg_, cc_, sc_;
    double beta_lambda_ = 0.0, beta_phi_ = 0.0, mean_jump_ = kDefaultMeanJump;
    std::map<double, Step> cache_;
};

struct PathSet {
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    Measure measure = Measure::Q;
    std::vector<StateVector> states;               // row-major (path, step), n_steps + 1 per path
    std::vector<std::vector<JumpEvent>> jump_events;  // per path

    const StateVector& at(std::size_t path, std::size_t step) const { return states[path * (n_steps + 1) + step]; }

    std::span<const StateVector> path(std::size_t i) const {
        return {states.data() + i * (n_steps + 1), n_steps + 1};
    }

    /// Header: magic "ACPS", uint32 version, uint64 paths, uint64 steps, double dt;
    /// then row-major doubles (path, step, 8 coordinates).
    void write_binary(std::ostream& os) const {
        const char magic[4] = {'A', 'C', 'P', 'S'};
        const std::uint32_t version = 1;
        const std::uint64_t np = n_paths, ns = n_steps;
        os.write(magic, 4);
        os.write(reinterpret_cast<const char*>(&version), sizeof version);
        os.write(reinterpret_cast<const char*>(&np), sizeof np);
        os.write(reinterpret_cast<const char*>(&ns), sizeof ns);
        os.write(reinterpret_cast<const char*>(&dt), sizeof dt);
        for (const auto& x : states) {
            const Vec8 v = x.vec();
            os.write(reinterpret_cast<const char*>(v.data()), 8 * sizeof(double));
        }
    }

    void write_csv(std::ostream& os) const {
        os << "path,step,time,r_s,theta_s,zeta,lambda,phi,xi,eta,nu\n";
        char buf[64];
        for (std::size_t i = 0; i < n_paths; ++i)
            for (std::size_t k = 0; k <= n_steps; ++k) {
                os << i << ',' << k;
                std::snprintf(buf, sizeof buf, ",%.17g", dt * static_cast<double>(k));
                os << buf;
                const Vec8 v = at(i, k).vec();
                for (int j = 0; j < 8; ++j) {
                    std::snprintf(buf, sizeof buf, ",%.17g", v[j]);
                    os << buf;
                }
                os << '\n';
            }
    }
};

inline PathSet simulate_paths(const ModelParams& p, const StateVector& initial, Measure measure, double dt,
                              std::size_t n_steps, std::size_t n_paths, std::uint64_t seed) {
    if (!(dt > 0.0)) throw InputError("dt must be > 0");
    if (n_paths == 0) throw InputError("n_paths must be > 0");
    PathSet ps;
    ps.dt = dt;
    ps.n_steps = n_steps;
    ps.n_paths = n_paths;
    ps.seed = seed;
    ps.measure = measure;
    ps.states.resize(n_paths * (n_steps + 1));
    ps.jump_events.resize(n_paths);
    parallel_chunks(n_paths, [&](std::size_t b, std::size_t e) {
        PathEngine engine(p, measure, dt);
        for (std::size_t i = b; i < e; ++i) {
            Rng rng(seed, i);
            PathState s = engine.start(initial, 0.0, rng);
            ps.states[i * (n_steps + 1)] = s.state();
            for (std::size_t k = 1; k <= n_steps; ++k) {
                engine.advance(s, dt * static_cast<double>(k), rng, &ps.jump_events[i]);
                ps.states[i * (n_steps + 1) + k] = s.state();
            }
        }
    });
    return ps;
}

/// Default time of one stored path: first u in (t, T] where the integral of
/// lambda (trapezoid on the path grid, starting at step `t_index`) reaches an
/// independent Exp(1) draw. Returns nothing if the path survives to T.
inline std::optional<double> simulate_default_time(std::span<const StateVector> path, double dt, std::size_t t_index,
                                                   double T, std::uint64_t seed) {
    if (!(dt > 0.0)) throw InputError("dt must be > 0");
    if (t_index >= path.size()) throw InputError("start index outside the path");
    Rng rng(seed, 0);
    const double E = rng.exp1();
    const double t = dt * static_cast<double>(t_index);
    double acc = 0.0;
    for (std::size_t k = t_index; k + 1 < path.size(); ++k) {
        const double u0 = dt * static_cast<double>(k);
        if (u0 >= T) break;
        const double len = std::min(dt, T - u0);
        const double a = std::max(path[k].lambda, 0.0), b = std::max(path[k + 1].lambda, 0.0);
        const double bl = a + (b - a) * len / dt;
        const double inc = 0.5 * (a + bl) * len;
        if (acc + inc >= E) {
            const double need = E - acc;
            const double slope = (b - a) / dt;
            double s;
            if (std::abs(slope) < 1e-14)
                s = need / a;
            else
                s = 2.0 * need / (a + std::sqrt(std::max(0.0, a * a + 2.0 * slope * need)));
            return std::max(t, u0 + std::min(s, len));
        }
        acc += inc;
    }
    return std::nullopt;
}

}  // namespace affine_curves
