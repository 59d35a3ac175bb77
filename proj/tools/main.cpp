// dsd: corpus synthesis, training, transfer inference, and inspection tools.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dsd/data.hpp"
#include "dsd/evalkit.hpp"
#include "dsd/summarizer_http.hpp"
#include "dsd/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// config plumbing: defaults + config file + dotted-key overrides; flags win

void merge_config(json& base, const json& file, const std::string& prefix) {
    if (!file.is_object()) throw dsd::ConfigError("config: expected an object at '" + prefix + "'");
    for (const auto& [k, v] : file.items()) {
        std::string path = prefix.empty() ? k : prefix + "." + k;
        if (!base.contains(k)) throw dsd::ConfigError("config: unknown key '" + path + "'");
        if (base[k].is_object()) {
            merge_config(base[k], v, path);
        } else {
            if (v.is_object() || v.is_array())
                throw dsd::ConfigError("config: scalar expected at '" + path + "'");
            base[k] = v;
        }
    }
}

json parse_scalar(const json& like, const std::string& key, const std::string& text) {
    try {
        if (like.is_boolean()) {
            if (text == "true" || text == "1") return true;
            if (text == "false" || text == "0") return false;
            throw std::invalid_argument("not a bool");
        }
        if (like.is_number_integer()) return std::stoll(text);
        if (like.is_number_unsigned()) return static_cast<std::uint64_t>(std::stoull(text));
        if (like.is_number_float()) return std::stod(text);
        return text;  // string
    } catch (const std::exception&) {
        throw dsd::ConfigError("config: cannot parse '" + text + "' for key '" + key + "'");
    }
}

void apply_override(json& base, const std::string& key, const std::string& value) {
    json* cur = &base;
    std::size_t pos = 0;
    std::string path = key;
    while (true) {
        std::size_t dot = path.find('.', pos);
        std::string part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!cur->contains(part)) throw dsd::ConfigError("config: unknown key '" + key + "'");
        cur = &(*cur)[part];
        if (dot == std::string::npos) break;
        pos = dot + 1;
        if (!cur->is_object()) throw dsd::ConfigError("config: '" + key + "' descends into a scalar");
    }
    if (cur->is_object()) throw dsd::ConfigError("config: '" + key + "' names a section, not a value");
    *cur = parse_scalar(*cur, key, value);
}

// Resolves defaults <- config file <- --set overrides; CLI flag values are
// applied by the caller afterwards so that flags always win.
json resolve_config(json defaults, const std::string& config_path,
                    const std::vector<std::string>& sets) {
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw dsd::MissingFileError("config file not found: " + config_path);
        json file;
        try {
            is >> file;
        } catch (const json::exception& e) {
            throw dsd::CorruptFileError("config file unparsable: " + std::string(e.what()));
        }
        merge_config(defaults, file, "");
    }
    for (const auto& kv : sets) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw dsd::ConfigError("--set expects key=value, got '" + kv + "'");
        apply_override(defaults, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return defaults;
}

void write_resolved(const json& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/config.resolved");
    os << cfg.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// shared builders

json schedule_defaults() {
    return {{"T", 50}, {"beta_start", 1e-3}, {"beta_end", 0.2}, {"kind", "linear"}};
}

json stage_defaults() {
    dsd::StageConfig s = dsd::StageConfig::defaults(50);
    return {{"T_sample", s.T_sample}, {"T1", s.T1}, {"T2", s.T2},
            {"w1", s.w1}, {"w2", s.w2}, {"w3", s.w3}, {"t_c", s.t_c}, {"t_f", s.t_f}};
}

json dims_defaults() {
    json j;
    dsd::to_json(j, dsd::DimsConfig{});
    return j;
}

dsd::NoiseSchedule schedule_from(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind != "linear" && kind != "cosine")
        throw dsd::ConfigError("schedule.kind must be 'linear' or 'cosine'");
    return dsd::make_schedule(j.at("T").get<int>(), j.at("beta_start").get<double>(),
                              j.at("beta_end").get<double>(),
                              kind == "linear" ? dsd::ScheduleKind::Linear
                                               : dsd::ScheduleKind::Cosine);
}

dsd::StageConfig stage_from(const json& j) {
    dsd::StageConfig s;
    s.T_sample = j.at("T_sample").get<int>();
    s.T1 = j.at("T1").get<int>();
    s.T2 = j.at("T2").get<int>();
    s.w1 = j.at("w1").get<double>();
    s.w2 = j.at("w2").get<double>();
    s.w3 = j.at("w3").get<double>();
    s.t_c = j.at("t_c").get<int>();
    s.t_f = j.at("t_f").get<int>();
    return s;
}

std::vector<dsd::VideoClip> load_corpus(const std::string& dir) {
    auto entries = dsd::load_corpus_index(dir);
    std::vector<dsd::VideoClip> clips;
    for (const auto& e : entries) clips.push_back(dsd::load_clip(dir + "/" + e.id));
    if (clips.empty()) throw dsd::ConfigError("corpus is empty: " + dir);
    return clips;
}

std::unique_ptr<dsd::Summarizer> summarizer_from_env() {
    const char* url = std::getenv("SUMMARIZER_URL");
    if (!url || !*url) return nullptr;
    const char* key = std::getenv("SUMMARIZER_KEY");
    return std::make_unique<dsd::HttpSummarizer>(url, key ? key : "");
}

void write_metrics_csv(const std::string& path, const dsd::MetricReport& r) {
    std::ofstream os(path);
    os.precision(10);
    os << "psnr_db,ssim,temporal_consistency,mask_coverage\n";
    os << r.psnr_db << "," << r.ssim_val << "," << r.temporal << "," << r.mask_coverage << "\n";
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_synth_data(const json& cfg) {
    std::string out = cfg.at("out").get<std::string>();
    write_resolved(cfg, out);
    int clips = cfg.at("clips").get<int>();
    dsd::Rng rng(cfg.at("seed").get<std::uint64_t>());
    std::vector<dsd::CorpusEntry> entries;
    for (int i = 0; i < clips; ++i) {
        dsd::SyntheticScene scene = dsd::random_scene(rng, cfg.at("frames").get<int>(),
                                                      cfg.at("height").get<int>(),
                                                      cfg.at("width").get<int>());
        dsd::VideoClip clip = dsd::gen_clip(scene, rng);
        char id[32];
        std::snprintf(id, sizeof(id), "clip_%04d", i);
        clip.manifest.id = id;
        dsd::save_clip(clip, out + "/" + id);
        entries.push_back({id, (i + 1) % 5 == 0 ? "val" : "train"});
    }
    dsd::save_corpus_index(entries, out);
    std::cout << "wrote " << clips << " clips to " << out << "\n";
    return 0;
}

dsd::TrainConfig train_config_from(const json& cfg, dsd::Phase phase) {
    dsd::TrainConfig tc;
    tc.phase = phase;
    tc.steps = cfg.at("steps").get<int>();
    tc.batch_size = cfg.at("batch_size").get<int>();
    tc.lr = cfg.at("lr").get<double>();
    tc.seed = cfg.at("seed").get<std::uint64_t>();
    tc.cop_enabled = cfg.at("cop_enabled").get<bool>();
    tc.stage = stage_from(cfg.at("stage"));
    tc.flow_sigma = cfg.at("flow_sigma").get<double>();
    tc.cond_dropout = cfg.at("cond_dropout").get<double>();
    tc.checkpoint_every = cfg.at("checkpoint_every").get<int>();
    tc.freeze_foreground = cfg.at("freeze_foreground").get<bool>();
    tc.T = cfg.at("schedule").at("T").get<int>();
    tc.beta_start = cfg.at("schedule").at("beta_start").get<double>();
    tc.beta_end = cfg.at("schedule").at("beta_end").get<double>();
    tc.dims = cfg.at("dims").get<dsd::DimsConfig>();
    const json& tg = cfg.at("toggles");
    tc.toggles.early_motion_injection = tg.at("early_motion_injection").get<bool>();
    tc.toggles.no_flow_noise = tg.at("no_flow_noise").get<bool>();
    tc.toggles.no_dual_stream = tg.at("no_dual_stream").get<bool>();
    tc.toggles.no_cop = tg.at("no_cop").get<bool>();
    tc.toggles.no_pretrain_init = tg.at("no_pretrain_init").get<bool>();
    tc.validate();
    return tc;
}

int cmd_train(const json& cfg, dsd::Phase phase) {
    dsd::TrainConfig tc = train_config_from(cfg, phase);
    std::string out = cfg.at("out").get<std::string>();
    write_resolved(cfg, out);
    fs::create_directories(out + "/checkpoints");

    auto corpus = load_corpus(cfg.at("corpus").get<std::string>());
    dsd::NoiseSchedule sched = schedule_from(cfg.at("schedule"));

    dsd::TrainState st;
    std::string init = cfg.at("init_checkpoint").get<std::string>();
    if (!init.empty() && !tc.toggles.no_pretrain_init) {
        dsd::TrainState warm = dsd::load_checkpoint(init);
        st = dsd::init_train_state(tc);  // fresh optimizer/rng, warm weights
        st.params = std::move(warm.params);
    } else {
        st = dsd::init_train_state(tc);
    }

    auto summ = summarizer_from_env();
    std::vector<dsd::LossRecord> log;
    int every = tc.checkpoint_every > 0 ? tc.checkpoint_every : tc.steps;
    for (int done = 0; done < tc.steps; done += every) {
        int n = std::min(every, tc.steps - done);
        auto chunk = dsd::train_steps(st, tc, corpus, sched, n, summ.get());
        log.insert(log.end(), chunk.begin(), chunk.end());
        char name[64];
        std::snprintf(name, sizeof(name), "step_%06ld.ckpt", st.step);
        dsd::save_checkpoint(st, out + "/checkpoints/" + name);
        std::cerr << "step " << st.step << " smoothed_loss " << st.smoothed << "\n";
    }
    dsd::save_checkpoint(st, out + "/checkpoints/final.ckpt");
    dsd::write_loss_csv(log, out + "/loss.csv");
    std::cout << "trained " << tc.steps << " steps; final smoothed loss " << st.smoothed << "\n";
    return 0;
}

dsd::TransferTask task_from(const std::string& s) {
    if (s == "foreground") return dsd::TransferTask::Foreground;
    if (s == "background") return dsd::TransferTask::Background;
    if (s == "motion") return dsd::TransferTask::Motion;
    if (s == "reconstruction") return dsd::TransferTask::Reconstruction;
    throw dsd::ConfigError("unknown task '" + s + "'");
}

int cmd_transfer(const json& cfg) {
    std::string out = cfg.at("out").get<std::string>();
    write_resolved(cfg, out);
    fs::create_directories(out + "/samples");

    dsd::VideoClip source = dsd::load_clip(cfg.at("source").get<std::string>());
    std::string ref_dir = cfg.at("reference").get<std::string>();
    dsd::VideoClip reference = ref_dir.empty() ? source : dsd::load_clip(ref_dir);

    dsd::TrainState st = dsd::load_checkpoint(cfg.at("checkpoint").get<std::string>());
    dsd::NoiseSchedule sched = schedule_from(cfg.at("schedule"));

    dsd::TransferOptions opt;
    opt.stage = stage_from(cfg.at("stage"));
    opt.cop_enabled = cfg.at("cop_enabled").get<bool>();
    opt.seed = cfg.at("seed").get<std::uint64_t>();
    opt.reference_frame = cfg.at("reference_frame").get<int>();
    auto summ = summarizer_from_env();
    opt.summarizer = summ.get();

    dsd::TransferResult res = dsd::run_transfer(task_from(cfg.at("task").get<std::string>()),
                                                source, reference, st.params, sched, opt);
    for (std::size_t i = 0; i < res.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.png", static_cast<int>(i));
        dsd::write_png(out + "/samples/" + name, res.frames[i]);
    }
    write_metrics_csv(out + "/metrics.csv", res.report);
    std::cout << "task " << cfg.at("task").get<std::string>()
              << " psnr " << res.report.psnr_db << " ssim " << res.report.ssim_val
              << " temporal " << res.report.temporal << "\n";
    return 0;
}

int cmd_eval(const json& cfg) {
    std::string out = cfg.at("out").get<std::string>();
    write_resolved(cfg, out);

    std::string dir = cfg.at("samples").get<std::string>();
    std::vector<std::string> paths;
    if (!fs::exists(dir)) throw dsd::MissingFileError("samples dir not found: " + dir);
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".png") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw dsd::MissingFileError("no .png frames in " + dir);
    std::vector<dsd::Image> frames;
    for (const auto& p : paths) frames.push_back(dsd::read_png(p));

    dsd::MetricReport r;
    r.temporal = dsd::temporal_consistency(frames);
    std::string ref_dir = cfg.at("reference").get<std::string>();
    if (!ref_dir.empty()) {
        dsd::VideoClip ref = dsd::load_clip(ref_dir);
        r.psnr_db = dsd::psnr(frames, ref.frames);
        r.ssim_val = dsd::ssim(frames, ref.frames);
        r.mask_coverage = ref.masks.empty() ? 0.0 : ref.masks[0].coverage();
    }
    write_metrics_csv(out + "/metrics.csv", r);
    std::cout << "psnr " << r.psnr_db << " ssim " << r.ssim_val
              << " temporal " << r.temporal << "\n";
    return 0;
}

int cmd_mask_demo(const json& cfg) {
    std::string out = cfg.at("out").get<std::string>();
    write_resolved(cfg, out);

    dsd::Rng rng(cfg.at("seed").get<std::uint64_t>());
    dsd::SyntheticScene scene = dsd::random_scene(rng, 1, cfg.at("height").get<int>(),
                                                  cfg.at("width").get<int>());
    dsd::VideoClip clip = dsd::gen_clip(scene, rng);
    const dsd::Image& img = clip.frames[0];

    dsd::BlockMaskResult r = dsd::random_block_mask(
        dsd::ImageF::from(img), cfg.at("coverage").get<double>(), cfg.at("min_block").get<int>(),
        cfg.at("max_block").get<int>(), cfg.at("boundary_margin").get<int>(),
        cfg.at("max_iter").get<int>(), rng);

    dsd::write_png(out + "/input.png", img);
    dsd::write_png(out + "/foreground.png", r.foreground.to_u8());
    dsd::write_png(out + "/background.png", r.background.to_u8());
    dsd::Image m(r.mask.h, r.mask.w, 1);
    for (std::size_t k = 0; k < m.px.size(); ++k) m.px[k] = r.mask.v[k] ? 255 : 0;
    dsd::write_png(out + "/mask.png", m);
    std::cout << "coverage " << r.mask.coverage() << " iterations " << r.iterations
              << " cap_hit " << (r.cap_hit ? "yes" : "no") << "\n";
    return 0;
}

int cmd_cop_preview(const json& cfg) {
    dsd::StageConfig sc;
    sc.T_sample = cfg.at("steps").get<int>();
    sc.T1 = cfg.at("t1").get<int>();
    sc.T2 = cfg.at("t2").get<int>();
    sc.w1 = cfg.at("w1").get<double>();
    sc.w2 = cfg.at("w2").get<double>();
    sc.w3 = cfg.at("w3").get<double>();
    if (!(0 < sc.T2 && sc.T2 < sc.T1 && sc.T1 <= sc.T_sample))
        throw dsd::ConfigError("cop-preview: need 0 < t2 < t1 <= steps");

    std::string prompt = cfg.at("prompt").get<std::string>();
    dsd::StubSummarizer stub;
    dsd::PromptHierarchy h = dsd::summarize(prompt, stub);

    int crs = 0, mid = 0, fine = 0;
    std::cout << "step,stage,weight,prompt\n";
    for (int step = sc.T_sample; step >= 1; --step) {
        auto [p, w] = dsd::select_prompt(step, sc, h);
        const char* stage = step >= sc.T1 ? "coarse" : step >= sc.T2 ? "mid" : "fine";
        (step >= sc.T1 ? crs : step >= sc.T2 ? mid : fine) += 1;
        std::cout << step << "," << stage << "," << w << ",\"" << p << "\"\n";
    }
    std::cout << "# counts coarse=" << crs << " mid=" << mid << " fine=" << fine << "\n";
    std::string out = cfg.at("out").get<std::string>();
    if (!out.empty()) write_resolved(cfg, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale video concept transfer toolkit"};
    app.require_subcommand(1);

    // shared per-subcommand state
    struct Common {
        std::string config_path;
        std::vector<std::string> sets;
    };
    auto add_common = [](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config_path, "JSON config file");
        sub->add_option("--set", c.sets, "dotted-key override, e.g. --set schedule.T=50");
    };

    // synth-data
    json sd_cfg = {{"clips", 4}, {"seed", 7}, {"out", "corpus"},
                   {"frames", 8}, {"height", 32}, {"width", 32}};
    Common sd_common;
    std::optional<int> sd_clips;
    std::optional<std::uint64_t> sd_seed;
    std::optional<std::string> sd_out;
    auto* sd = app.add_subcommand("synth-data", "generate a synthetic clip corpus");
    add_common(sd, sd_common);
    sd->add_option("--clips", sd_clips, "number of clips");
    sd->add_option("--seed", sd_seed, "rng seed");
    sd->add_option("--out", sd_out, "output directory");

    // pretrain / finetune
    json train_cfg = {{"steps", 500},
                      {"batch_size", 1},
                      {"lr", 1e-3},
                      {"seed", 0},
                      {"cop_enabled", false},
                      {"flow_sigma", 0.1},
                      {"cond_dropout", 0.1},
                      {"checkpoint_every", 0},
                      {"freeze_foreground", false},
                      {"corpus", "corpus"},
                      {"out", "run"},
                      {"init_checkpoint", ""},
                      {"schedule", schedule_defaults()},
                      {"stage", stage_defaults()},
                      {"dims", dims_defaults()},
                      {"toggles", {{"early_motion_injection", false},
                                   {"no_flow_noise", false},
                                   {"no_dual_stream", false},
                                   {"no_cop", false},
                                   {"no_pretrain_init", false}}}};
    json pt_cfg = train_cfg;
    json ft_cfg = train_cfg;
    ft_cfg["cop_enabled"] = true;

    struct TrainFlags {
        Common common;
        std::optional<int> steps;
        std::optional<double> lr;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> corpus, out, init;
    };
    TrainFlags ptf, ftf;
    auto add_train_flags = [](CLI::App* sub, TrainFlags& f) {
        sub->add_option("--steps", f.steps, "training steps");
        sub->add_option("--lr", f.lr, "learning rate");
        sub->add_option("--seed", f.seed, "rng seed");
        sub->add_option("--corpus", f.corpus, "corpus directory");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--init-checkpoint", f.init, "warm-start checkpoint");
    };
    auto* pt = app.add_subcommand("pretrain", "random-masking pretraining");
    add_common(pt, ptf.common);
    add_train_flags(pt, ptf);
    auto* ft = app.add_subcommand("finetune", "mask-conditioned finetuning");
    add_common(ft, ftf.common);
    add_train_flags(ft, ftf);

    // transfer
    json tr_cfg = {{"task", "reconstruction"},
                   {"source", ""},
                   {"reference", ""},
                   {"checkpoint", ""},
                   {"out", "transfer"},
                   {"seed", 0},
                   {"cop_enabled", true},
                   {"reference_frame", 0},
                   {"schedule", schedule_defaults()},
                   {"stage", stage_defaults()}};
    Common tr_common;
    std::optional<std::string> tr_task, tr_source, tr_reference, tr_ckpt, tr_out;
    std::optional<std::uint64_t> tr_seed;
    auto* tr = app.add_subcommand("transfer", "run a transfer task from a checkpoint");
    add_common(tr, tr_common);
    tr->add_option("--task", tr_task, "foreground|background|motion|reconstruction");
    tr->add_option("--source", tr_source, "source clip directory");
    tr->add_option("--reference", tr_reference, "reference clip directory");
    tr->add_option("--checkpoint", tr_ckpt, "model checkpoint");
    tr->add_option("--out", tr_out, "output directory");
    tr->add_option("--seed", tr_seed, "sampling seed");

    // eval
    json ev_cfg = {{"samples", ""}, {"reference", ""}, {"out", "eval"}};
    Common ev_common;
    std::optional<std::string> ev_samples, ev_reference, ev_out;
    auto* ev = app.add_subcommand("eval", "score a directory of frames");
    add_common(ev, ev_common);
    ev->add_option("--samples", ev_samples, "directory of .png frames");
    ev->add_option("--reference", ev_reference, "reference clip directory");
    ev->add_option("--out", ev_out, "output directory");

    // mask-demo
    json md_cfg = {{"seed", 0}, {"coverage", 0.5}, {"min_block", 4}, {"max_block", 8},
                   {"boundary_margin", 1}, {"max_iter", 500}, {"height", 32}, {"width", 32},
                   {"out", "mask-demo"}};
    Common md_common;
    std::optional<std::uint64_t> md_seed;
    std::optional<double> md_coverage;
    std::optional<std::string> md_out;
    auto* md = app.add_subcommand("mask-demo", "visualize random block masking");
    add_common(md, md_common);
    md->add_option("--seed", md_seed, "rng seed");
    md->add_option("--coverage", md_coverage, "target coverage fraction");
    md->add_option("--out", md_out, "output directory");

    // cop-preview
    json cp_cfg = {{"steps", 50}, {"t1", 35}, {"t2", 15},
                   {"w1", 1.5}, {"w2", 2.0}, {"w3", 1.0},
                   {"prompt", "A red fox runs left, tail raised. Snow falls. The light is pale."},
                   {"out", ""}};
    Common cp_common;
    std::optional<int> cp_steps, cp_t1, cp_t2;
    std::optional<std::string> cp_prompt;
    auto* cp = app.add_subcommand("cop-preview", "print the stage/prompt/weight table");
    add_common(cp, cp_common);
    cp->add_option("--steps", cp_steps, "sampling steps");
    cp->add_option("--t1", cp_t1, "coarse/mid boundary");
    cp->add_option("--t2", cp_t2, "mid/fine boundary");
    cp->add_option("--prompt", cp_prompt, "fine prompt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    try {
        if (sd->parsed()) {
            json cfg = resolve_config(sd_cfg, sd_common.config_path, sd_common.sets);
            if (sd_clips) cfg["clips"] = *sd_clips;
            if (sd_seed) cfg["seed"] = *sd_seed;
            if (sd_out) cfg["out"] = *sd_out;
            return cmd_synth_data(cfg);
        }
        auto finish_train = [&](json base, const TrainFlags& f, dsd::Phase phase) {
            json cfg = resolve_config(std::move(base), f.common.config_path, f.common.sets);
            if (f.steps) cfg["steps"] = *f.steps;
            if (f.lr) cfg["lr"] = *f.lr;
            if (f.seed) cfg["seed"] = *f.seed;
            if (f.corpus) cfg["corpus"] = *f.corpus;
            if (f.out) cfg["out"] = *f.out;
            if (f.init) cfg["init_checkpoint"] = *f.init;
            return cmd_train(cfg, phase);
        };
        if (pt->parsed()) return finish_train(pt_cfg, ptf, dsd::Phase::Pretrain);
        if (ft->parsed()) return finish_train(ft_cfg, ftf, dsd::Phase::Finetune);
        if (tr->parsed()) {
            json cfg = resolve_config(tr_cfg, tr_common.config_path, tr_common.sets);
            if (tr_task) cfg["task"] = *tr_task;
            if (tr_source) cfg["source"] = *tr_source;
            if (tr_reference) cfg["reference"] = *tr_reference;
            if (tr_ckpt) cfg["checkpoint"] = *tr_ckpt;
            if (tr_out) cfg["out"] = *tr_out;
            if (tr_seed) cfg["seed"] = *tr_seed;
            return cmd_transfer(cfg);
        }
        if (ev->parsed()) {
            json cfg = resolve_config(ev_cfg, ev_common.config_path, ev_common.sets);
            if (ev_samples) cfg["samples"] = *ev_samples;
            if (ev_reference) cfg["reference"] = *ev_reference;
            if (ev_out) cfg["out"] = *ev_out;
            return cmd_eval(cfg);
        }
        if (md->parsed()) {
            json cfg = resolve_config(md_cfg, md_common.config_path, md_common.sets);
            if (md_seed) cfg["seed"] = *md_seed;
            if (md_coverage) cfg["coverage"] = *md_coverage;
            if (md_out) cfg["out"] = *md_out;
            return cmd_mask_demo(cfg);
        }
        if (cp->parsed()) {
            json cfg = resolve_config(cp_cfg, cp_common.config_path, cp_common.sets);
            if (cp_steps) cfg["steps"] = *cp_steps;
            if (cp_t1) cfg["t1"] = *cp_t1;
            if (cp_t2) cfg["t2"] = *cp_t2;
            if (cp_prompt) cfg["prompt"] = *cp_prompt;
            return cmd_cop_preview(cfg);
        }
    } catch (const dsd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
