// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tamrl/tamrl.hpp"

namespace fs = std::filesystem;
using namespace tamrl;

namespace {

const std::string kCli = TAMRL_CLI_PATH;
const fs::path kData = TAMRL_DATA_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

struct Verdict {
    int id;
    bool pass;
    std::string what;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, const std::string& what) {
    verdicts.push_back({id, pass, what});
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << what << std::endl;
}

void progress(const std::string& s) { std::cerr << "  " << s << std::endl; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = "'" + kCli + "' " + args + " >>'" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

void criterion_1() {
    const auto t0 = Clock::now();
    GradcheckOptions o;
    const auto reports = run_gradcheck(o);
    const double secs = seconds_since(t0);
    bool ok = secs < 60.0 && reports.size() >= 5;
    double worst = 0.0;
    std::string names;
    for (const auto& r : reports) {
        ok = ok && r.instances >= 20 && r.passed(1e-4);
        worst = std::max(worst, r.max_rel_error);
        names += (names.empty() ? "" : " ") + r.name + "=" + fmt(r.max_rel_error, 2);
    }
    report(1, ok, "gradient oracle, 20 instances per component, max rel error " + fmt(worst, 2) + " < 1e-4 [" + names +
                      "], " + fmt(secs, 3) + " s < 60 s");
}

template <BaseNetwork P>
bool identity_trial(const P& base, const Tensor& x) {
    return predict(identity_modulation(base), x) == BaseOps<P>::forward(base, x).first;
}

void criterion_2() {
    SeededRng rng(42);
    int mlp_ok = 0, seq_ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        MlpParams mlp = init_mlp({1, 100, 100, 100, 1}, rng);
        for (auto& l : mlp.layers)
            for (auto& b : l.bias.values()) b = rng.uniform(-1.0, 1.0);
        Tensor x({1 + rng.index(16), 1});
        for (auto& v : x.values()) v = rng.uniform(-5.0, 5.0);
        mlp_ok += identity_trial(mlp, x);

        SeqBaseParams seq = init_seq_base(3, 8, 6, rng);
        for (auto& b : seq.lstm.bias.values()) b = rng.uniform(-1.0, 1.0);
        Tensor xs({1 + rng.index(20), 3});
        for (auto& v : xs.values()) v = rng.normal();
        seq_ok += identity_trial(seq, xs);
    }
    report(2, mlp_ok == 100 && seq_ok == 100,
           "identity modulation bit-identical on " + std::to_string(mlp_ok) + "/100 MLP and " + std::to_string(seq_ok) +
               "/100 LSTM-base random inputs");
}

// ---------------------------------------------------------------------------
// Criteria 3-5 share the desk-scale synthetic runs.
// ---------------------------------------------------------------------------

struct SyntheticRuns {
    SuiteResult<MlpParams> set1, set3;
    double set1_seconds = 0.0;
    std::vector<double> fresh_epoch1;
};

SyntheticRuns run_synthetic() {
    const ExperimentConfig base = read_manifest((kData / "manifests" / "set1_desk.manifest").string());
    validate_config(base);
    SyntheticRuns out;
    auto log = [](const std::string& s) {
        if (s.starts_with("eval") || s.find("epoch 1 ") != std::string::npos) progress(s);
    };

    ExperimentConfig c1 = base;
    c1.synthetic_set = 1;
    progress("SET1: " + std::to_string(c1.synthetic_train_tasks_per_mode) + " train / " +
             std::to_string(c1.synthetic_eval_tasks_per_mode) + " eval tasks per mode, " + std::to_string(c1.ensemble_size) +
             " seeds");
    auto t0 = Clock::now();
    const auto d1 = experiment_data(c1);
    out.set1 = run_suite<MlpParams>(c1, d1, {Variant::tamrl, Variant::tamrl_no_finetune, Variant::fomaml, Variant::base}, log);
    out.set1_seconds = seconds_since(t0);

    // Epoch-1 joint loss from a fresh initialization, same seeds and data.
    ExperimentConfig one = c1;
    one.train_joint_epochs = 1;
    for (auto seed : ensemble_seeds(c1.seed, c1.ensemble_size))
        out.fresh_epoch1.push_back(joint_stage(fresh_state<MlpParams>(one, seed), d1.source, one, log).epoch_loss.at(0));

    ExperimentConfig c3 = base;
    c3.synthetic_set = 3;
    progress("SET3");
    out.set3 = run_suite<MlpParams>(c3, experiment_data(c3), {Variant::tamrl, Variant::fomaml}, log);
    return out;
}

std::string per_seed(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : "/") + fmt(x);
    return s;
}

void criterion_3(const SyntheticRuns& r) {
    const double tamrl = r.set1.mean_mse(Variant::tamrl);
    const double fomaml = r.set1.mean_mse(Variant::fomaml);
    const double base = r.set1.mean_mse(Variant::base);
    const bool ok = tamrl < fomaml && tamrl < base && r.set1_seconds < 15 * 60;
    report(3, ok, "SET1 mean query MSE tamrl " + fmt(tamrl) + " < fomaml " + fmt(fomaml) + " and < pretrained base " + fmt(base) +
                      " (3 seeds, 3000/300 tasks per mode), " + fmt(r.set1_seconds, 3) + " s < 900 s");
}

void criterion_4(const SyntheticRuns& r) {
    auto advantage = [](const SuiteResult<MlpParams>& s) {
        const double f = s.mean_mse(Variant::fomaml);
        return (f - s.mean_mse(Variant::tamrl)) / f;
    };
    const double a1 = advantage(r.set1), a3 = advantage(r.set3);
    report(4, a1 > a3, "relative advantage over fomaml SET1 " + fmt(a1) + " > SET3 " + fmt(a3) + " (SET3 tamrl " +
                           fmt(r.set3.mean_mse(Variant::tamrl)) + ", fomaml " + fmt(r.set3.mean_mse(Variant::fomaml)) + ")");
}

void criterion_5(const SyntheticRuns& r) {
    std::vector<double> pre_epoch1;
    for (const auto& curve : r.set1.joint_loss_pretrained) pre_epoch1.push_back(curve.at(0));
    const double pre = mean_of(pre_epoch1), fresh = mean_of(r.fresh_epoch1);
    const bool pretrain_ok = pre < fresh;

    const auto& ft = r.set1.member_mse.at(Variant::tamrl);
    const auto& nf = r.set1.member_mse.at(Variant::tamrl_no_finetune);
    std::size_t improved = 0;
    for (std::size_t k = 0; k < ft.size(); ++k) improved += ft[k] < nf[k];
    const double change = mean_of(ft) / mean_of(nf) - 1.0;
    const bool finetune_ok = change <= 0.02 && 2 * improved > ft.size();

    report(5, pretrain_ok && finetune_ok,
           std::string("(a) ") + (pretrain_ok ? "ok" : "not met") + ": epoch-1 joint loss pretrained " + fmt(pre) + " vs fresh " +
               fmt(fresh) + " [" + per_seed(pre_epoch1) + " vs " + per_seed(r.fresh_epoch1) + "]; (b) " +
               (finetune_ok ? "ok" : "not met") + ": 5-step adaptation changes mean query MSE by " + fmt(100 * change, 3) +
               "% (limit +2%), improves " + std::to_string(improved) + "/" + std::to_string(ft.size()) + " seeds [" + per_seed(ft) +
               " vs " + per_seed(nf) + "]");
}

// ---------------------------------------------------------------------------

void criterion_6() {
    SeededRng rng(6);
    std::size_t violations = 0, windows_seen = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t L = 1 + rng.index(60);
        const std::size_t T = L + rng.index(400);
        const std::size_t S = 1 + rng.index(2 * L);
        const auto w = make_windows(T, L, S);
        // Enumeration oracle.
        std::vector<std::size_t> starts;
        for (std::size_t s = 0; s + L <= T; s += S) starts.push_back(s);
        if (w.size() != starts.size()) ++violations;
        for (std::size_t i = 0; i < w.size() && i < starts.size(); ++i) {
            if (w[i].start != starts[i] || w[i].length != L || w[i].start + w[i].length > T) ++violations;
        }
        windows_seen += w.size();
        if (w.size() < 2) continue;
        const WindowSplit sp = trial % 2 ? split_support_query(w.size(), rng.uniform(0.05, 0.95), rng)
                                         : split_by_count(w.size(), 1 + rng.index(w.size() - 1), rng);
        std::set<std::size_t> seen;
        for (auto i : sp.support) seen.insert(i);
        for (auto i : sp.query) {
            if (seen.count(i)) ++violations;
            seen.insert(i);
        }
        if (sp.support.empty() || sp.query.empty() || seen.size() != w.size() || sp.support.size() + sp.query.size() != w.size() ||
            *seen.rbegin() >= w.size())
            ++violations;
    }
    report(6, violations == 0, "10000 randomized window/split trials (" + std::to_string(windows_seen) + " windows), " +
                                   std::to_string(violations) + " violations of disjointness, coverage or bounds");
}

void criterion_7() {
    const fs::path root = fs::temp_directory_path() / "tamrl_acceptance_determinism";
    fs::remove_all(root);
    const fs::path log = root / "cli.log";
    fs::create_directories(root);
    const std::string manifest = "--manifest '" + (kData / "manifests" / "set1_smoke.manifest").string() + "'";
    bool ok = true;
    for (const char* run : {"a", "b"}) {
        const std::string out = " --seed 7 --out '" + (root / run).string() + "'";
        for (const char* verb : {"synth-gen", "pretrain", "train", "train --variant fomaml",
                                 "adapt --variant tamrl,tamrl-no-finetune,fomaml,base", "eval"})
            ok = ok && run_cli(std::string(verb) + " " + manifest + out, log) == 0;
    }
    const std::string a = slurp(root / "a" / "results.csv"), b = slurp(root / "b" / "results.csv");
    const bool same = ok && !a.empty() && a == b;
    std::size_t rows = 0;
    for (char ch : a) rows += ch == '\n';
    report(7, same, std::string("synth-gen -> pretrain -> train -> adapt -> eval twice with seed 7: results.csv ") +
                        (same ? "byte-identical" : "differs or a step failed (see " + log.string() + ")") + " (" +
                        std::to_string(a.size()) + " bytes, " + std::to_string(rows) + " lines)");
    if (same) fs::remove_all(root);
}

std::size_t oracle_count(std::size_t T, std::size_t L, std::size_t S) {
    std::size_t n = 0;
    for (std::size_t s = 0; s + L <= T; s += S) ++n;
    return n;
}

void criterion_8() {
    const fs::path root = fs::temp_directory_path() / "tamrl_acceptance_ingest";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::pair<const char*, const char*> cases[] = {
        {"missing_cell", "line 8: missing value in column 'VPD_F'"},
        {"non_monotone", "line 13: timestamp '2010-01-11' is not after the previous row"},
        {"unknown_column", "unknown column 'NEE_VUT_REF'"},
        {"misspelled_key", "unknown manifest key 'window.lenght'"},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, diag] : cases) {
        const fs::path log = root / (std::string(name) + ".log");
        const int code = run_cli("pretrain --manifest '" + (kData / "malformed" / (std::string(name) + ".manifest")).string() +
                                     "' --out '" + (root / name).string() + "'",
                                 log);
        const bool hit = code == 1 && slurp(log).find(diag) != std::string::npos;
        ok = ok && hit;
        detail += std::string(name) + "=" + (hit ? "exit 1" : "exit " + std::to_string(code) + " wrong diagnostic") + " ";
    }
    auto check_sample = [&](const char* manifest, std::size_t L, std::size_t S) {
        const ExperimentConfig c = read_manifest((kData / "manifests" / manifest).string());
        const auto entities = load_entity_dir(kData / "manifests" / c.dataset_path, c.schema);
        for (const auto& e : entities) {
            const std::size_t n = make_windows(e, L, S).size(), want = oracle_count(e.length(), L, S);
            ok = ok && n == want && c.window_length == L && c.window_stride == S;
            detail += e.entity_id + "(T=" + std::to_string(e.length()) + ")=" + std::to_string(n) + "/" + std::to_string(want) + " ";
        }
    };
    check_sample("fluxnet_sample.manifest", 30, 15);
    check_sample("caravan_sample.manifest", 365, 183);
    if (!detail.empty()) detail.pop_back();
    report(8, ok, "malformed corpus and sample windowing (windows/oracle): " + detail);
    fs::remove_all(root);
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    try {
        std::cerr << "criterion 1: gradient oracle suite" << std::endl;
        criterion_1();
        criterion_2();
        criterion_6();
        criterion_8();
        std::cerr << "criterion 7: CLI determinism" << std::endl;
        criterion_7();
        std::cerr << "criteria 3-5: desk-scale synthetic runs" << std::endl;
        const SyntheticRuns r = run_synthetic();
        criterion_3(r);
        criterion_4(r);
        criterion_5(r);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    int failed = 0;
    for (const auto& v : verdicts) failed += !v.pass;
    std::cout << "acceptance: " << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed in "
              << fmt(seconds_since(t0), 4) << " s" << std::endl;
    return failed == 0 && verdicts.size() == 8 ? 0 : 1;
}
