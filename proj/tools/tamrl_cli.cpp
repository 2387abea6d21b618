// tamrl: command-line driver for pretraining, joint training, adaptation,
// evaluation, ablations and embedding export.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tamrl/tamrl.hpp"

namespace fs = std::filesystem;
using namespace tamrl;

namespace {

struct Options {
    std::string verb;
    std::string manifest;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> set;
    std::string variant = "tamrl";
    bool force = false;
    bool resume = false;
    std::vector<std::string> overrides;
    std::vector<std::string> inputs;
};

void log_line(const std::string& s) { std::cerr << "[tamrl] " << s << '\n'; }

ExperimentConfig resolve_config(const Options& o) {
    ExperimentConfig c = o.manifest.empty() ? ExperimentConfig{} : read_manifest(o.manifest);
    // Relative data paths in a manifest are relative to the manifest itself.
    const fs::path base = fs::path(o.manifest).parent_path();
    for (std::string* p : {&c.dataset_path, &c.dataset_eval_path}) {
        if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    }
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
        try {
            apply_setting(c, csv::trim(kv.substr(0, eq)), csv::trim(kv.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("command line: ") + e.what());
        }
    }
    if (o.seed) c.seed = *o.seed;
    if (o.set) c.synthetic_set = *o.set;
    validate_config(c);
    return c;
}

std::string provenance(const ExperimentConfig& c) { return "config_hash=" + hex64(config_hash(c)) + ";seed=" + std::to_string(c.seed); }

void log_config(const ExperimentConfig& c, const std::string& verb) {
    log_line(verb + ": " + provenance(c));
    std::istringstream text(manifest_text(c));
    for (std::string line; std::getline(text, line);) log_line("  " + line);
}

/// Output files a verb will write; all are checked before any work starts.
class Outputs {
public:
    Outputs(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

    fs::path add(const std::string& name) {
        paths_.push_back(dir_ / name);
        return paths_.back();
    }

    void check() const {
        for (const auto& p : paths_) {
            if (fs::exists(p) && !force_) throw ConfigError(p.string() + " exists; pass --force to overwrite");
        }
        fs::create_directories(dir_);
    }

private:
    fs::path dir_;
    bool force_;
    std::vector<fs::path> paths_;
};

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(p.string() + ": cannot write");
    return out;
}

void write_curves(const fs::path& p, const ExperimentConfig& c, const std::vector<std::pair<std::uint64_t, std::vector<double>>>& curves) {
    auto out = open_out(p);
    out << "# " << provenance(c) << "\nseed,epoch,loss\n";
    for (const auto& [seed, loss] : curves)
        for (std::size_t e = 0; e < loss.size(); ++e) out << seed << ',' << e + 1 << ',' << csv::format_double(loss[e]) << '\n';
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

const char* const kSplits[] = {"train", "eval"};

/// Synthetic episodes come from synth-gen files in the output directory when
/// present (they must carry this config's provenance), else are regenerated.
std::vector<TaskEpisode> load_synthetic_split(const ExperimentConfig& c, const fs::path& dir, const std::string& split) {
    const fs::path tasks = dir / ("tasks_" + split + ".csv"), eps = dir / ("episodes_" + split + ".csv");
    if (!fs::exists(tasks) || !fs::exists(eps)) {
        return synthetic::to_task_episodes(split == "train" ? synthetic_train_tasks(c) : synthetic_eval_tasks(c), split);
    }
    std::ifstream ti(tasks), ei(eps);
    std::string first;
    std::getline(ti, first);
    if (first != "# " + provenance(c)) {
        throw ConfigError(tasks.string() + " was generated under a different config or seed (" + first + ")");
    }
    ti.seekg(0);
    return synthetic::to_task_episodes(synthetic::read_episodes(ti, ei, tasks.string()), split);
}

ExperimentData load_data(const ExperimentConfig& c, const fs::path& dir) {
    if (c.dataset_kind != "synthetic") return series_data(c);
    auto train = load_synthetic_split(c, dir, "train");
    ExperimentData d;
    d.pooled = pool_samples(train);
    d.source = fixed_episodes(std::move(train));
    d.eval = load_synthetic_split(c, dir, "eval");
    return d;
}

// ---------------------------------------------------------------------------
// Checkpoints: one file per (training stage, member seed).
// ---------------------------------------------------------------------------

std::string stage_of(Variant v) {
    switch (v) {
        case Variant::base: return "pretrain";
        case Variant::tamrl:
        case Variant::tamrl_no_finetune: return "joint";
        case Variant::tamrl_no_pretrain:
        case Variant::tamrl_no_finetune_no_pretrain: return "joint-fresh";
        case Variant::fomaml: return "fomaml";
    }
    return "?";
}

std::string ckpt_name(const std::string& stage, std::uint64_t seed) { return stage + "_seed" + std::to_string(seed) + ".ckpt"; }

template <BaseNetwork P>
ModelState<P> load_member(const ExperimentConfig& c, const fs::path& dir, const std::string& stage, std::uint64_t seed) {
    const fs::path p = dir / ckpt_name(stage, seed);
    if (!fs::exists(p)) throw ConfigError(p.string() + " not found; run the '" + (stage == "pretrain" ? "pretrain" : "train") + "' verb first");
    return load_checkpoint(p.string(), fresh_state<P>(c, seed), model_config_hash(c));
}

template <BaseNetwork P>
std::vector<ModelState<P>> load_members(const ExperimentConfig& c, const fs::path& dir, Variant v) {
    std::vector<ModelState<P>> out;
    for (auto seed : ensemble_seeds(c.seed, c.ensemble_size)) out.push_back(load_member<P>(c, dir, stage_of(v), seed));
    return out;
}

// ---------------------------------------------------------------------------
// Predictions and scoring
// ---------------------------------------------------------------------------

void write_predictions(const fs::path& p, const ExperimentConfig& c, const VariantPredictions& vp, const std::vector<TaskEpisode>& eval) {
    auto out = open_out(p);
    out << "# " << provenance(c) << "\nmodel,seed,entity_id,index,prediction,target\n";
    const std::string model = variant_name(vp.variant);
    for (std::size_t k = 0; k < vp.preds.size(); ++k) {
        for (std::size_t i = 0; i < eval.size(); ++i) {
            const auto target = query_targets(eval[i]);
            for (std::size_t j = 0; j < target.size(); ++j) {
                out << model << ',' << vp.seeds[k] << ',' << eval[i].id << ',' << j << ',' << csv::format_double(vp.preds[k][i][j])
                    << ',' << csv::format_double(target[j]) << '\n';
            }
        }
    }
}

/// Per-member and ensemble RMSE rows from one predictions file, in the
/// order entities and seeds first appear.
std::vector<ResultRow> score_predictions(const fs::path& p, const std::string& budget) {
    std::ifstream in(p);
    if (!in) throw DataError(p.string() + ": cannot open");
    const auto t = csv::read_table(in, p.string());
    const std::size_t cm = t.require_column("model", p.string()), cs = t.require_column("seed", p.string()),
                      ce = t.require_column("entity_id", p.string()), cp = t.require_column("prediction", p.string()),
                      ct = t.require_column("target", p.string());
    struct Entity {
        std::vector<double> target;
        std::map<std::string, std::vector<double>> pred;
    };
    std::string model;
    std::vector<std::string> seeds, ids;
    std::map<std::string, Entity> ents;
    for (const auto& r : t.rows) {
        if (model.empty()) model = r.fields[cm];
        if (r.fields[cm] != model) throw DataError(p.string() + ": line " + std::to_string(r.line) + ": mixed models in one file");
        const auto pred = csv::parse_double(r.fields[cp]), target = csv::parse_double(r.fields[ct]);
        if (!pred || !target) throw DataError(p.string() + ": line " + std::to_string(r.line) + ": invalid number");
        const std::string& seed = r.fields[cs];
        const std::string& id = r.fields[ce];
        if (std::find(seeds.begin(), seeds.end(), seed) == seeds.end()) seeds.push_back(seed);
        if (!ents.count(id)) ids.push_back(id);
        auto& e = ents[id];
        e.pred[seed].push_back(*pred);
        if (seed == seeds.front()) e.target.push_back(*target);
    }
    std::vector<ResultRow> rows;
    for (const auto& id : ids) {
        const auto& e = ents.at(id);
        std::vector<std::vector<double>> members;
        for (const auto& s : seeds) {
            if (!e.pred.count(s)) throw DataError(p.string() + ": seed " + s + " has no predictions for " + id);
            rows.push_back({id, budget, model, s, rmse(e.pred.at(s), e.target)});
            members.push_back(e.pred.at(s));
        }
        rows.push_back({id, budget, model, "ensemble", ensemble_rmse(members, e.target)});
    }
    return rows;
}

std::vector<Variant> parse_variants(const std::string& s) {
    std::vector<Variant> out;
    for (const auto& name : csv::split_fields(s)) out.push_back(parse_variant(name));
    if (out.empty()) throw ConfigError("no variant given");
    return out;
}

// ---------------------------------------------------------------------------
// Verbs
// ---------------------------------------------------------------------------

int cmd_gradcheck(const Options& o) {
    GradcheckOptions g;
    if (o.seed) g.seed = *o.seed;
    if (const char* env = std::getenv("TAMRL_GRADCHECK_CORRUPT")) g.corrupt = env;
    log_line("gradcheck: seed=" + std::to_string(g.seed) + " instances=" + std::to_string(g.instances) + " eps=" + csv::format_double(g.eps));
    std::vector<std::string> failed;
    std::cout << "component,instances,max_rel_error,status\n";
    for (const auto& r : run_gradcheck(g)) {
        const bool ok = r.passed(g.tolerance);
        std::cout << r.name << ',' << r.instances << ',' << csv::format_double(r.max_rel_error) << ',' << (ok ? "ok" : "FAIL") << '\n';
        if (!ok) failed.push_back(r.name);
    }
    if (!failed.empty()) {
        std::cerr << "gradcheck failed for: " << csv::join(failed, ' ') << " (tolerance " << csv::format_double(g.tolerance) << ")\n";
        return 1;
    }
    return 0;
}

int cmd_synth_gen(const Options& o, const ExperimentConfig& c) {
    if (c.dataset_kind != "synthetic") throw ConfigError("synth-gen needs dataset.kind = synthetic");
    Outputs outs(o.out, o.force);
    std::vector<std::pair<fs::path, fs::path>> files;
    for (const char* split : kSplits) files.emplace_back(outs.add(std::string("tasks_") + split + ".csv"), outs.add(std::string("episodes_") + split + ".csv"));
    outs.check();
    const auto train = synthetic_train_tasks(c), eval = synthetic_eval_tasks(c);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& es = i == 0 ? train : eval;
        auto t = open_out(files[i].first);
        synthetic::write_task_manifest(t, es, {provenance(c)});
        auto e = open_out(files[i].second);
        synthetic::write_episodes(e, es, {provenance(c)});
        log_line("wrote " + std::to_string(es.size()) + " " + kSplits[i] + " tasks to " + files[i].first.string());
    }
    return 0;
}

template <BaseNetwork P>
int cmd_pretrain(const Options& o, const ExperimentConfig& c) {
    Outputs outs(o.out, o.force);
    const auto seeds = ensemble_seeds(c.seed, c.ensemble_size);
    std::vector<fs::path> ckpts;
    for (auto s : seeds) ckpts.push_back(outs.add(ckpt_name("pretrain", s)));
    const fs::path curve = outs.add("pretrain_loss.csv");
    outs.check();
    const auto data = load_data(c, o.out);
    std::vector<std::pair<std::uint64_t, std::vector<double>>> curves;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        auto [state, loss] = pretrain_stage<P>(c, seeds[k], data.pooled, log_line);
        save_checkpoint(ckpts[k].string(), state, model_config_hash(c));
        curves.emplace_back(seeds[k], std::move(loss));
    }
    write_curves(curve, c, curves);
    return 0;
}

template <BaseNetwork P>
int cmd_train(const Options& o, const ExperimentConfig& c) {
    const Variant v = parse_variant(o.variant);
    if (v == Variant::base) throw ConfigError("variant base is the pretrained network; run 'pretrain' instead");
    if (o.resume && v == Variant::fomaml) throw ConfigError("--resume is not supported for fomaml");
    const std::string stage = stage_of(v);
    const auto seeds = ensemble_seeds(c.seed, c.ensemble_size);
    // --resume continues the existing checkpoints in place.
    Outputs outs(o.out, o.force || o.resume);
    std::vector<fs::path> ckpts;
    for (auto s : seeds) ckpts.push_back(outs.add(ckpt_name(stage, s)));
    const fs::path curve = outs.add(stage + "_loss.csv");
    outs.check();
    const auto data = load_data(c, o.out);
    std::vector<std::pair<std::uint64_t, std::vector<double>>> curves;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        ModelState<P> state;
        std::vector<double> loss;
        if (v == Variant::fomaml) {
            std::tie(state, loss) = fomaml_stage<P>(c, seeds[k], data.source, log_line);
        } else {
            ModelState<P> start;
            if (o.resume) {
                start = load_member<P>(c, o.out, stage, seeds[k]);
                log_line("resuming seed " + std::to_string(seeds[k]) + " after joint epoch " + std::to_string(start.joint_epochs));
            } else {
                start = pretrained(v) ? load_member<P>(c, o.out, "pretrain", seeds[k]) : fresh_state<P>(c, seeds[k]);
            }
            auto jr = joint_stage(std::move(start), data.source, c, log_line);
            state = std::move(jr.state);
            loss = std::move(jr.epoch_loss);
        }
        save_checkpoint(ckpts[k].string(), state, model_config_hash(c));
        curves.emplace_back(seeds[k], std::move(loss));
    }
    write_curves(curve, c, curves);
    return 0;
}

template <BaseNetwork P>
int cmd_adapt(const Options& o, const ExperimentConfig& c) {
    const auto variants = parse_variants(o.variant);
    Outputs outs(o.out, o.force);
    std::vector<fs::path> files;
    for (auto v : variants) files.push_back(outs.add("predictions_" + variant_name(v) + ".csv"));
    outs.check();
    const auto data = load_data(c, o.out);
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto cfg = adapt_config(c, variants[i]);
        log_line("adapt " + variant_name(variants[i]) + ": " + std::to_string(cfg.num_inner_steps) + " steps, lr " + csv::format_double(cfg.inner_lr) +
                 ", " + std::to_string(data.eval.size()) + " episodes");
        const auto vp = predict_variant(load_members<P>(c, o.out, variants[i]), data.eval, cfg);
        write_predictions(files[i], c, vp, data.eval);
    }
    return 0;
}

int cmd_eval(const Options& o, const ExperimentConfig& c) {
    std::vector<fs::path> inputs;
    for (const auto& s : o.inputs) inputs.emplace_back(s);
    if (inputs.empty()) {
        for (const auto& entry : fs::directory_iterator(o.out)) {
            const auto name = entry.path().filename().string();
            if (name.starts_with("predictions_") && name.ends_with(".csv")) inputs.push_back(entry.path());
        }
        std::sort(inputs.begin(), inputs.end());
    }
    if (inputs.empty()) throw ConfigError("eval: no predictions_*.csv in " + o.out + "; run 'adapt' first");
    Outputs outs(o.out, o.force);
    const fs::path results = outs.add("results.csv");
    outs.check();
    std::vector<ResultRow> rows;
    for (const auto& p : inputs) {
        auto part = score_predictions(p, eval_label(c));
        log_line("scored " + p.string() + ": " + std::to_string(part.size()) + " rows");
        rows.insert(rows.end(), part.begin(), part.end());
    }
    auto out = open_out(results);
    write_results(out, rows, {provenance(c)});
    return 0;
}

template <BaseNetwork P>
int cmd_ablate(const Options& o, const ExperimentConfig& c) {
    const std::vector<Variant> variants{Variant::tamrl,  Variant::tamrl_no_finetune, Variant::tamrl_no_pretrain,
                                        Variant::tamrl_no_finetune_no_pretrain, Variant::fomaml, Variant::base};
    const std::string tag = eval_label(c);
    Outputs outs(o.out, o.force);
    const fs::path results = outs.add("results_ablate_" + tag + ".csv");
    const fs::path curves = outs.add("joint_loss_ablate_" + tag + ".csv");
    outs.check();
    const auto data = load_data(c, o.out);
    const auto r = run_suite<P>(c, data, variants, log_line);
    {
        auto out = open_out(results);
        write_results(out, suite_rows(r, variants, data.eval, tag), {provenance(c)});
    }
    auto out = open_out(curves);
    out << "# " << provenance(c) << "\npretrained,seed,epoch,loss\n";
    const auto seeds = ensemble_seeds(c.seed, c.ensemble_size);
    for (int pre = 1; pre >= 0; --pre) {
        const auto& all = pre ? r.joint_loss_pretrained : r.joint_loss_fresh;
        for (std::size_t k = 0; k < all.size(); ++k)
            for (std::size_t e = 0; e < all[k].size(); ++e)
                out << (pre ? "yes" : "no") << ',' << seeds[k] << ',' << e + 1 << ',' << csv::format_double(all[k][e]) << '\n';
    }
    for (auto v : variants) std::cout << tag << ',' << variant_name(v) << ",mean_query_mse," << csv::format_double(r.mean_mse(v)) << '\n';
    return 0;
}

template <BaseNetwork P>
int cmd_export_embeddings(const Options& o, const ExperimentConfig& c) {
    const Variant v = parse_variant(o.variant);
    if (!modulated(v)) throw ConfigError("variant " + variant_name(v) + " has no task encoder");
    Outputs outs(o.out, o.force);
    const fs::path file = outs.add("embeddings_" + stage_of(v) + ".csv");
    outs.check();
    const auto data = load_data(c, o.out);
    const auto members = load_members<P>(c, o.out, v);
    auto out = open_out(file);
    out << "# " << provenance(c) << "\nentity_id,label,seed";
    for (std::size_t i = 0; i < c.model_encoder_hidden; ++i) out << ",z" << i;
    out << '\n';
    for (const auto& m : members) {
        for (const auto& e : data.eval) {
            const Tensor z = encode_task(m.params.encoder, e.support);
            out << e.id << ',' << e.label << ',' << m.seed;
            for (double x : z.values()) out << ',' << csv::format_double(x);
            out << '\n';
        }
    }
    log_line("wrote " + std::to_string(members.size() * data.eval.size()) + " embeddings to " + file.string());
    return 0;
}

/// Mean ensemble and mean member RMSE per (budget, model) over results files.
int cmd_report(const Options& o, const ExperimentConfig& c) {
    std::vector<fs::path> inputs;
    for (const auto& s : o.inputs) inputs.emplace_back(s);
    if (inputs.empty()) {
        for (const auto& entry : fs::directory_iterator(o.out)) {
            const auto name = entry.path().filename().string();
            if (name.starts_with("results") && name.ends_with(".csv")) inputs.push_back(entry.path());
        }
        std::sort(inputs.begin(), inputs.end());
    }
    if (inputs.empty()) throw ConfigError("report: no results*.csv in " + o.out);
    Outputs outs(o.out, o.force);
    const fs::path file = outs.add("report.csv");
    outs.check();
    struct Acc {
        double ens = 0, member = 0;
        std::size_t n_ens = 0, n_member = 0;
    };
    std::map<std::pair<std::string, std::string>, Acc> acc;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& p : inputs) {
        for (const auto& r : read_results_file(p.string())) {
            const auto key = std::make_pair(r.budget, r.model);
            if (!acc.count(key)) order.push_back(key);
            auto& a = acc[key];
            if (r.seed == "ensemble") {
                a.ens += r.rmse;
                ++a.n_ens;
            } else {
                a.member += r.rmse;
                ++a.n_member;
            }
        }
    }
    auto out = open_out(file);
    out << "# " << provenance(c) << "\nbudget,model,entities,ensemble_rmse,member_rmse\n";
    for (const auto& key : order) {
        const auto& a = acc.at(key);
        const double ens = a.n_ens ? a.ens / static_cast<double>(a.n_ens) : 0.0;
        const double mem = a.n_member ? a.member / static_cast<double>(a.n_member) : 0.0;
        out << key.first << ',' << key.second << ',' << a.n_ens << ',' << csv::format_double(ens) << ',' << csv::format_double(mem) << '\n';
        std::cout << key.first << ',' << key.second << ',' << csv::format_double(ens) << '\n';
    }
    return 0;
}

template <BaseNetwork P>
int dispatch(const Options& o, const ExperimentConfig& c) {
    if (o.verb == "synth-gen") return cmd_synth_gen(o, c);
    if (o.verb == "pretrain") return cmd_pretrain<P>(o, c);
    if (o.verb == "train") return cmd_train<P>(o, c);
    if (o.verb == "adapt") return cmd_adapt<P>(o, c);
    if (o.verb == "eval") return cmd_eval(o, c);
    if (o.verb == "ablate") return cmd_ablate<P>(o, c);
    if (o.verb == "export-embeddings") return cmd_export_embeddings<P>(o, c);
    if (o.verb == "report") return cmd_report(o, c);
    throw ConfigError("unknown verb '" + o.verb + "'");
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"TAM-RL: task-aware modulation for few-shot regression"};
    app.add_option("verb", o.verb, "gradcheck | synth-gen | pretrain | train | adapt | eval | ablate | export-embeddings | report")
        ->required()
        ->check(CLI::IsMember({"gradcheck", "synth-gen", "pretrain", "train", "adapt", "eval", "ablate", "export-embeddings", "report"}));
    app.add_option("overrides", o.overrides, "manifest overrides as key=value");
    app.add_option("--manifest", o.manifest, "experiment manifest (key = value lines)");
    app.add_option("--seed", o.seed, "experiment seed (overrides the manifest)");
    app.add_option("--out", o.out, "output directory")->capture_default_str();
    app.add_option("--set", o.set, "synthetic mode set")->check(CLI::Range(1, 3));
    app.add_option("--variant", o.variant, "variant tag (adapt accepts a comma-separated list)")->capture_default_str();
    app.add_option("--input", o.inputs, "input files for eval/report (default: scan --out)");
    app.add_flag("--force", o.force, "overwrite existing outputs");
    app.add_flag("--resume", o.resume, "train: continue existing joint checkpoints");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (o.verb == "gradcheck") return cmd_gradcheck(o);
        const ExperimentConfig c = resolve_config(o);
        log_config(c, o.verb);
        return c.model_base == "lstm" ? dispatch<SeqBaseParams>(o, c) : dispatch<MlpParams>(o, c);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
