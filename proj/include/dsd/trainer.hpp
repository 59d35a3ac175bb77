#ifndef DSD_TRAINER_HPP
#define DSD_TRAINER_HPP

#include <cmath>
#include <deque>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsd/cop.hpp"
#include "dsd/data.hpp"
#include "dsd/net.hpp"
#include "dsd/schedule.hpp"

namespace dsd {

struct Toggles {
    bool early_motion_injection = false;
    bool no_flow_noise = false;
    bool no_dual_stream = false;
    bool no_cop = false;
    bool no_pretrain_init = false;
};

enum class Phase { Pretrain, Finetune };

struct TrainConfig {
    Phase phase = Phase::Pretrain;
    int steps = 500;
    int batch_size = 1;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool cop_enabled = true;  // finetune-phase CoP loss routing
    StageConfig stage;
    double flow_sigma = 0.1;
    double cond_dropout = 0.1;
    Toggles toggles;
    int checkpoint_every = 0;  // 0 = only at the end
    bool freeze_foreground = false;
    int T = 50;
    // Wider beta range than the canonical T=1000 values: at T=50 the
    // cumulative alpha_bar must still reach ~0 so sampling can start from
    // pure noise.
    double beta_start = 1e-3, beta_end = 0.2;
    DimsConfig dims;

    void validate() const {
        if (steps < 0 || batch_size < 1) throw ConfigError("TrainConfig: bad steps/batch_size");
        if (lr < 0.0) throw ConfigError("TrainConfig: negative learning rate");
        if (toggles.no_cop && phase == Phase::Finetune && cop_enabled)
            throw ConfigError("TrainConfig: contradictory toggles (no_cop with cop_enabled)");
        if (cop_enabled && phase == Phase::Finetune) stage.validate(T);
    }
};

// Per-toggle wiring: each ablation flag rewires exactly one mechanism.
struct Wiring {
    NetToggles net;
    double flow_sigma = 0.1;
    bool cop_enabled = true;
    bool use_pretrain_init = true;
};

inline Wiring apply_toggles(const TrainConfig& cfg) {
    cfg.validate();
    Wiring w;
    w.net.early_motion_injection = cfg.toggles.early_motion_injection;
    w.net.no_dual_stream = cfg.toggles.no_dual_stream;
    w.flow_sigma = cfg.toggles.no_flow_noise ? 0.0 : cfg.flow_sigma;
    w.cop_enabled = cfg.cop_enabled && !cfg.toggles.no_cop && cfg.phase == Phase::Finetune;
    w.use_pretrain_init = !cfg.toggles.no_pretrain_init;
    return w;
}

struct TrainState {
    ModelParams params;
    std::map<std::string, Mat> adam_m, adam_v;
    long step = 0;
    Rng rng{0};
    std::deque<double> window;  // last-50 losses for the smoothed log
    double smoothed = 0.0;
};

struct LossRecord {
    long step;
    double raw, smoothed;
};

inline TrainState init_train_state(const TrainConfig& cfg) {
    TrainState st;
    st.rng = Rng(cfg.seed);
    Rng init_rng = st.rng.fork();
    st.params = init_params(cfg.dims, init_rng);
    return st;
}

namespace detail {
constexpr double kAdamB1 = 0.9, kAdamB2 = 0.999, kAdamEps = 1e-8;
constexpr int kSmoothWindow = 50;
}  // namespace detail

// Runs n_steps optimization steps, mutating st in place. Deterministic given
// (state, config, corpus).
inline std::vector<LossRecord> train_steps(TrainState& st, const TrainConfig& cfg,
                                           const std::vector<VideoClip>& corpus,
                                           const NoiseSchedule& sched, int n_steps,
                                           Summarizer* summ = nullptr) {
    if (corpus.empty()) throw ConfigError("train_steps: empty corpus");
    Wiring wiring = apply_toggles(cfg);
    SplitMode mode = cfg.phase == Phase::Pretrain ? SplitMode::Pretrain : SplitMode::Finetune;
    StubSummarizer stub;
    if (!summ) summ = &stub;

    std::vector<LossRecord> log;
    for (int s = 0; s < n_steps; ++s) {
        std::map<std::string, Mat> grad_acc;
        double loss_acc = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const VideoClip& clip = corpus[st.rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1)];
            int t = static_cast<int>(st.rng.uniform_int(1, sched.T));
            BatchOptions bopt;
            bopt.flow_sigma = wiring.flow_sigma;
            Batch batch = make_batch(clip, mode, t, st.rng, sched, cfg.dims, bopt);

            std::string prompt = batch.prompt;
            if (wiring.cop_enabled)
                prompt = staged_prompt_for_training(t - 1, cfg.stage, summarize(batch.prompt, *summ), sched.T);
            if (st.rng.uniform() < cfg.cond_dropout) prompt = "";  // classifier-free dropout
            batch.cond.text = text_query(prompt, cfg.dims);

            Graph g;
            int eps_pred = forward(g, latent_to_mat(batch.zt), batch.cond, t, st.params, wiring.net);
            int loss = g.mse(eps_pred, g.input(latent_to_mat(batch.eps)));
            g.backward(loss);
            loss_acc += g.val(loss)(0, 0);
            for (const auto& [name, mat] : st.params.w) {
                if (!g.has_param(name)) continue;
                Mat gr = g.param_grad(name, static_cast<int>(mat.rows()), static_cast<int>(mat.cols()));
                auto it = grad_acc.find(name);
                if (it == grad_acc.end()) grad_acc[name] = std::move(gr);
                else it->second += gr;
            }
        }

        ++st.step;
        double b1t = 1.0 - std::pow(detail::kAdamB1, static_cast<double>(st.step));
        double b2t = 1.0 - std::pow(detail::kAdamB2, static_cast<double>(st.step));
        for (auto& [name, gr] : grad_acc) {
            if (cfg.freeze_foreground && name.rfind("fg.", 0) == 0) continue;
            gr /= static_cast<double>(cfg.batch_size);
            Mat& m = st.adam_m.try_emplace(name, Mat::Zero(gr.rows(), gr.cols())).first->second;
            Mat& v = st.adam_v.try_emplace(name, Mat::Zero(gr.rows(), gr.cols())).first->second;
            m = detail::kAdamB1 * m + (1.0 - detail::kAdamB1) * gr;
            v = detail::kAdamB2 * v + (1.0 - detail::kAdamB2) * gr.cwiseProduct(gr);
            Mat update = (m / b1t).array() / ((v / b2t).array().sqrt() + detail::kAdamEps);
            st.params.w[name] -= cfg.lr * update.matrix();
        }

        double raw = loss_acc / cfg.batch_size;
        st.window.push_back(raw);
        if (st.window.size() > detail::kSmoothWindow) st.window.pop_front();
        double sm = 0.0;
        for (double x : st.window) sm += x;
        st.smoothed = sm / static_cast<double>(st.window.size());
        log.push_back({st.step, raw, st.smoothed});
    }
    return log;
}

inline void write_loss_csv(const std::vector<LossRecord>& log, const std::string& path) {
    std::ofstream os(path);
    os << "step,raw_loss,smoothed_loss\n";
    os.precision(17);
    for (const auto& r : log) os << r.step << "," << r.raw << "," << r.smoothed << "\n";
}

// ---------------------------------------------------------------------------
// checkpointing: params + optimizer moments + loop state in one container

inline void save_checkpoint(const TrainState& st, const std::string& path) {
    nlohmann::json meta;
    meta["kind"] = "train";
    meta["dims"] = st.params.dims;
    meta["step"] = st.step;
    meta["rng"] = st.rng.state();
    meta["smoothed"] = st.smoothed;
    meta["window"] = st.window;
    std::map<std::string, Mat> arrays = st.params.w;
    for (const auto& [k, m] : st.adam_m) arrays["adam.m." + k] = m;
    for (const auto& [k, m] : st.adam_v) arrays["adam.v." + k] = m;
    write_container(path, meta, arrays);
}

inline TrainState load_checkpoint(const std::string& path) {
    auto [meta, arrays] = read_container(path);
    if (meta.value("kind", "") != "train")
        throw CorruptFileError("load_checkpoint: not a training checkpoint: " + path);
    TrainState st;
    st.params.dims = meta.at("dims").get<DimsConfig>();
    st.step = meta.at("step").get<long>();
    st.rng.set_state(meta.at("rng").get<std::string>());
    st.smoothed = meta.at("smoothed").get<double>();
    for (double x : meta.at("window")) st.window.push_back(x);
    for (auto& [name, m] : arrays) {
        if (name.rfind("adam.m.", 0) == 0) st.adam_m[name.substr(7)] = std::move(m);
        else if (name.rfind("adam.v.", 0) == 0) st.adam_v[name.substr(7)] = std::move(m);
        else st.params.w[name] = std::move(m);
    }
    return st;
}

}  // namespace dsd

#endif
