#ifndef DSD_COP_HPP
#define DSD_COP_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "dsd/common.hpp"
#include "dsd/net.hpp"
#include "dsd/schedule.hpp"

namespace dsd {

struct SummarizerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PromptHierarchy {
    std::string tau_crs;
    std::string tau_mid;
    std::string tau_fine;  // the unmodified source caption
};

struct StageConfig {
    int T_sample = 50;
    int T1 = 35;  // coarse stage lower bound (step >= T1)
    int T2 = 15;  // medium stage lower bound (T2 <= step < T1)
    double w1 = 1.5, w2 = 2.0, w3 = 1.0;
    int t_c = 35;  // training boundary: t in [t_c, T-1] -> coarse
    int t_f = 15;  // t in [t_f, t_c) -> mid, [0, t_f) -> fine

    static StageConfig defaults(int T_train) {
        StageConfig c;
        c.t_c = static_cast<int>(std::ceil(0.7 * T_train));
        c.t_f = static_cast<int>(std::ceil(0.3 * T_train));
        return c;
    }

    void validate(int T_train) const {
        if (!(0 < T2 && T2 < T1 && T1 <= T_sample))
            throw ConfigError("StageConfig: need 0 < T2 < T1 <= T_sample");
        if (!(0 < t_f && t_f < t_c && t_c < T_train))
            throw ConfigError("StageConfig: need 0 < t_f < t_c < T_train");
    }
};

// One request/response pair: fine prompt in, (coarse, mid) out.
class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual std::pair<std::string, std::string> coarse_mid(const std::string& fine) = 0;
};

namespace detail {
inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\n\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\n\r");
    return s.substr(a, b - a + 1);
}
}  // namespace detail

// Deterministic rule-based summarizer: mid = first two sentences
// (period-delimited), coarse = first comma-free clause of the first sentence.
class StubSummarizer : public Summarizer {
public:
    std::pair<std::string, std::string> coarse_mid(const std::string& fine) override {
        std::size_t p1 = fine.find('.');
        std::string mid = fine;
        if (p1 != std::string::npos) {
            std::size_t p2 = fine.find('.', p1 + 1);
            if (p2 != std::string::npos) mid = fine.substr(0, p2 + 1);
        }
        std::string first = (p1 == std::string::npos) ? fine : fine.substr(0, p1);
        std::size_t comma = first.find(',');
        std::string crs = (comma == std::string::npos) ? first : first.substr(0, comma);
        return {detail::trim(crs), detail::trim(mid)};
    }
};

inline PromptHierarchy summarize(const std::string& fine_prompt, Summarizer& client) {
    auto [crs, mid] = client.coarse_mid(fine_prompt);
    PromptHierarchy h{crs, mid, fine_prompt};
    if (h.tau_crs.size() > h.tau_mid.size() || h.tau_mid.size() > h.tau_fine.size())
        throw SummarizerError("summarize: hierarchy lengths must be non-decreasing");
    return h;
}

// Sampling-time stage selection; step counts down from T_sample to 1.
inline std::pair<std::string, double> select_prompt(int step, const StageConfig& cfg,
                                                    const PromptHierarchy& h) {
    if (step < 1 || step > cfg.T_sample) throw TimestepError("select_prompt: step out of [1,T_sample]");
    if (step >= cfg.T1) return {h.tau_crs, cfg.w1};
    if (step >= cfg.T2) return {h.tau_mid, cfg.w2};
    return {h.tau_fine, cfg.w3};
}

// Training-time prompt routing over t in [0, T-1].
inline std::string staged_prompt_for_training(int t, const StageConfig& cfg,
                                              const PromptHierarchy& h, int T_train) {
    if (t < 0 || t > T_train - 1) throw TimestepError("staged_prompt_for_training: t out of [0,T-1]");
    if (t >= cfg.t_c) return h.tau_crs;
    if (t >= cfg.t_f) return h.tau_mid;
    return h.tau_fine;
}

// Classifier-free guidance: eps_u + w * (eps_c - eps_u).
inline Latent cfg_combine(const Latent& eps_cond, const Latent& eps_uncond, double w) {
    if (!eps_cond.same_shape(eps_uncond)) throw ShapeError("cfg_combine: shape mismatch");
    Latent out = eps_cond;
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = eps_uncond.v[i] + w * (eps_cond.v[i] - eps_uncond.v[i]);
    return out;
}

// sampling step -> training timestep (ceil mapping; step 0 -> noise-free)
inline int sample_step_to_t(int step, int T_sample, int T_train) {
    return (step * T_train + T_sample - 1) / T_sample;
}

struct DenoiseOptions {
    bool cop_enabled = true;
    NetToggles net;
};

// Staged denoising loop: per step select the stage prompt and weight, run the
// conditional and unconditional passes, combine, take one deterministic
// reverse step. Returns the clean token latent.
inline Latent hierarchical_denoise(const Latent& seed_noise, const CondInputs& cond_base,
                                   const PromptHierarchy& h, const StageConfig& cfg,
                                   const ModelParams& params, const NoiseSchedule& sched,
                                   const DenoiseOptions& opt = {}) {
    Latent z = seed_noise;
    for (int step = cfg.T_sample; step >= 1; --step) {
        std::string prompt;
        double w;
        if (opt.cop_enabled) {
            std::tie(prompt, w) = select_prompt(step, cfg, h);
        } else {
            prompt = h.tau_fine;
            w = 1.0;
        }
        int t = sample_step_to_t(step, cfg.T_sample, sched.T);
        int t_prev = sample_step_to_t(step - 1, cfg.T_sample, sched.T);

        Mat z_mat = latent_to_mat(z);
        CondInputs cond = cond_base;
        cond.text = text_query(prompt, params.dims);
        Graph gc;
        Latent eps_c = mat_to_latent(gc.val(forward(gc, z_mat, cond, t, params, opt.net)),
                                     z.f, z.h, z.w, LatentRole::Prediction);
        Latent eps;
        if (w == 1.0) {
            eps = eps_c;  // cfg_combine with w=1 returns the conditional branch exactly
        } else {
            CondInputs uncond = cond_base;
            uncond.text = text_query("", params.dims);
            Graph gu;
            Latent eps_u = mat_to_latent(gu.val(forward(gu, z_mat, uncond, t, params, opt.net)),
                                         z.f, z.h, z.w, LatentRole::Prediction);
            eps = cfg_combine(eps_c, eps_u, w);
        }
        // Static thresholding: clamp the implied z0-estimate to the valid
        // pixel range and re-derive eps before the reverse step. Keeps the
        // deterministic trajectory bounded; without it prediction errors at
        // high noise levels compound multiplicatively.
        {
            double ab = sched.alpha_bar(t);
            double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
            for (std::size_t i = 0; i < z.v.size(); ++i) {
                double z0e = (z.v[i] - sb * eps.v[i]) / sa;
                if (z0e > 1.0) z0e = 1.0;
                if (z0e < -1.0) z0e = -1.0;
                eps.v[i] = (z.v[i] - sa * z0e) / sb;
            }
        }
        z = reverse_step(z, eps, t, t_prev, sched);
    }
    z.role = LatentRole::Clean;
    return z;
}

}  // namespace dsd

#endif
