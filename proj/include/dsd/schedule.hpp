#ifndef DSD_SCHEDULE_HPP
#define DSD_SCHEDULE_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dsd/common.hpp"

namespace dsd {

enum class LatentRole { Clean, Noisy, Noise, Prediction };

// Real-valued token grid (frames, height, width, channels).
struct Latent {
    int f = 0, h = 0, w = 0, c = 0;
    std::vector<double> v;
    LatentRole role = LatentRole::Clean;

    Latent() = default;
    Latent(int f_, int h_, int w_, int c_, LatentRole r = LatentRole::Clean)
        : f(f_), h(h_), w(w_), c(c_), v(static_cast<std::size_t>(f_) * h_ * w_ * c_, 0.0), role(r) {
        if (f_ <= 0 || h_ <= 0 || w_ <= 0 || c_ <= 0)
            throw ShapeError("Latent: all dimensions must be positive");
    }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Latent& o) const { return f == o.f && h == o.h && w == o.w && c == o.c; }
};

enum class ScheduleKind { Linear, Cosine };

// beta/alpha/alpha_bar tables over T training timesteps. Immutable once built.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // beta_t, t = 1..T at index t-1
    std::vector<double> alphas;      // 1 - beta_t
    std::vector<double> alpha_bars;  // prod_{s<=t} alpha_s

    // alpha_bar with the t=0 convention alpha_bar(0) = 1 (noise-free level)
    double alpha_bar(int t) const {
        if (t < 0 || t > T) throw TimestepError("alpha_bar: t out of [0,T]");
        return t == 0 ? 1.0 : alpha_bars[t - 1];
    }
};

inline NoiseSchedule make_schedule(int T, double beta_start, double beta_end, ScheduleKind kind) {
    if (T < 2) throw InvalidArgument("make_schedule: T must be >= 2");
    if (!(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0))
        throw InvalidArgument("make_schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(T);
    if (kind == ScheduleKind::Linear) {
        for (int i = 0; i < T; ++i)
            s.betas[i] = beta_start + (beta_end - beta_start) * i / (T - 1);
    } else {
        // cosine alpha_bar profile, betas derived from consecutive ratios and
        // clamped into the requested range
        auto ab = [T](int t) {
            double x = (static_cast<double>(t) / T + 0.008) / 1.008;
            double c = std::cos(x * M_PI / 2.0);
            return c * c;
        };
        for (int i = 0; i < T; ++i) {
            double b = 1.0 - ab(i + 1) / ab(i);
            if (b < beta_start) b = beta_start;
            if (b > beta_end) b = beta_end;
            s.betas[i] = b;
        }
    }
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    double run = 1.0;
    for (int i = 0; i < T; ++i) {
        s.alphas[i] = 1.0 - s.betas[i];
        run *= s.alphas[i];
        s.alpha_bars[i] = run;
    }
    return s;
}

// Forward (noising) process in marginal form: z_t = sqrt(ab_t) z0 + sqrt(1-ab_t) eps.
inline Latent q_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched) {
    if (!z0.same_shape(eps)) throw ShapeError("q_sample: z0/eps shape mismatch");
    if (t < 1 || t > sched.T) throw TimestepError("q_sample: t out of [1,T]");
    double ab = sched.alpha_bar(t);
    double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Latent zt = z0;
    zt.role = LatentRole::Noisy;
    for (std::size_t i = 0; i < zt.v.size(); ++i) zt.v[i] = a * z0.v[i] + b * eps.v[i];
    return zt;
}

// Mean squared error between predicted and true noise.
inline double denoising_loss(const Latent& eps_pred, const Latent& eps) {
    if (!eps_pred.same_shape(eps)) throw ShapeError("denoising_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.v.size(); ++i) {
        double d = eps_pred.v[i] - eps.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.v.size());
}

// Deterministic reverse step: estimate z0 from (z_t, eps_pred), re-noise to the
// alpha_bar level of t_prev with the same predicted noise. t_prev = 0 lands on
// the noise-free level.
inline Latent reverse_step(const Latent& zt, const Latent& eps_pred, int t, int t_prev,
                           const NoiseSchedule& sched) {
    if (!zt.same_shape(eps_pred)) throw ShapeError("reverse_step: shape mismatch");
    if (t_prev >= t) throw TimestepError("reverse_step: need t_prev < t");
    if (t < 1 || t > sched.T || t_prev < 0) throw TimestepError("reverse_step: t out of range");
    double ab_t = sched.alpha_bar(t);
    double ab_p = sched.alpha_bar(t_prev);
    double inv_sa = 1.0 / std::sqrt(ab_t), sb = std::sqrt(1.0 - ab_t);
    double sa_p = std::sqrt(ab_p), sb_p = std::sqrt(1.0 - ab_p);
    Latent out = zt;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        double z0_est = (zt.v[i] - sb * eps_pred.v[i]) * inv_sa;
        out.v[i] = sa_p * z0_est + sb_p * eps_pred.v[i];
    }
    return out;
}

}  // namespace dsd

#endif
