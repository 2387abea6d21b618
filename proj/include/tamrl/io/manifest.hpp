#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tamrl/io/csv.hpp"
#include "tamrl/io/entity_series.hpp"

namespace tamrl {

/// Every setting an experiment run needs. Defaults are the synthetic
/// benchmark at desk scale.
struct ExperimentConfig {
    // data source: "synthetic" or "series"
    std::string dataset_kind = "synthetic";
    std::string dataset_path;
    std::string dataset_eval_path;
    std::size_t dataset_few_shot_length = 365;
    std::string dataset_budget;

    // synthetic benchmark
    int synthetic_set = 1;
    std::size_t synthetic_train_tasks_per_mode = 3000;
    std::size_t synthetic_eval_tasks_per_mode = 300;
    std::size_t synthetic_support_size = 5;
    std::size_t synthetic_query_size = 5;
    double synthetic_noise_std = 0.3;
    double synthetic_x_min = -5.0;
    double synthetic_x_max = 5.0;

    SeriesSchema schema;

    std::size_t window_length = 30;
    std::size_t window_stride = 15;
    double support_fraction = 0.5;
    std::size_t support_windows = 1;  // 0: use support_fraction

    // "mlp" (pointwise) or "lstm" (sequence to sequence)
    std::string model_base = "mlp";
    std::size_t model_base_hidden = 100;
    std::size_t model_base_layers = 4;
    std::size_t model_encoder_hidden = 40;
    std::size_t model_input_width = 0;  // 0: same as model_base_hidden

    std::size_t train_pretrain_epochs = 20;
    std::size_t train_joint_epochs = 30;
    std::size_t train_batch_size = 64;
    std::size_t train_pretrain_batch_size = 64;
    double train_lr = 1e-3;
    std::size_t train_episodes_per_entity = 1;

    std::size_t adapt_steps = 5;
    double adapt_lr = 1e-3;

    std::size_t fomaml_inner_steps = 5;
    double fomaml_inner_lr = 0.01;
    std::size_t fomaml_epochs = 0;  // 0: same as train_joint_epochs

    std::uint64_t seed = 0;
    std::size_t ensemble_size = 5;

    std::size_t input_width() const { return model_input_width ? model_input_width : model_base_hidden; }
    std::size_t fomaml_epoch_count() const { return fomaml_epochs ? fomaml_epochs : train_joint_epochs; }

    bool operator==(const ExperimentConfig&) const = default;
};

namespace manifest_detail {

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline std::size_t to_size(const std::string& key, const std::string& v) {
    auto n = csv::parse_u64(v);
    if (!n) throw ConfigError("manifest key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(*n);
}

inline double to_double(const std::string& key, const std::string& v) {
    auto d = csv::parse_double(v);
    if (!d) throw ConfigError("manifest key '" + key + "': expected a number, got '" + v + "'");
    return *d;
}

template <class M>
Field make_field(std::string key, M ExperimentConfig::*member) {
    Field f;
    f.key = key;
    f.set = [key, member](ExperimentConfig& c, const std::string& v) {
        if constexpr (std::is_same_v<M, std::string>) {
            c.*member = v;
        } else if constexpr (std::is_same_v<M, double>) {
            c.*member = to_double(key, v);
        } else if constexpr (std::is_same_v<M, int>) {
            c.*member = static_cast<int>(to_size(key, v));
        } else {
            c.*member = static_cast<M>(to_size(key, v));
        }
    };
    f.get = [member](const ExperimentConfig& c) {
        if constexpr (std::is_same_v<M, std::string>) {
            return c.*member;
        } else if constexpr (std::is_same_v<M, double>) {
            return csv::format_double(c.*member);
        } else {
            return std::to_string(c.*member);
        }
    };
    return f;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    for (auto& s : csv::split_fields(v))
        if (!s.empty()) out.push_back(s);
    return out;
}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        using C = ExperimentConfig;
        std::vector<Field> f{
            make_field("adapt.lr", &C::adapt_lr),
            make_field("adapt.steps", &C::adapt_steps),
            make_field("dataset.budget", &C::dataset_budget),
            make_field("dataset.eval_path", &C::dataset_eval_path),
            make_field("dataset.few_shot_length", &C::dataset_few_shot_length),
            make_field("dataset.kind", &C::dataset_kind),
            make_field("dataset.path", &C::dataset_path),
            make_field("ensemble.size", &C::ensemble_size),
            make_field("fomaml.epochs", &C::fomaml_epochs),
            make_field("fomaml.inner_lr", &C::fomaml_inner_lr),
            make_field("fomaml.inner_steps", &C::fomaml_inner_steps),
            make_field("model.base", &C::model_base),
            make_field("model.base_hidden", &C::model_base_hidden),
            make_field("model.base_layers", &C::model_base_layers),
            make_field("model.encoder_hidden", &C::model_encoder_hidden),
            make_field("model.input_width", &C::model_input_width),
            make_field("seed", &C::seed),
            make_field("support.fraction", &C::support_fraction),
            make_field("support.windows", &C::support_windows),
            make_field("synthetic.eval_tasks_per_mode", &C::synthetic_eval_tasks_per_mode),
            make_field("synthetic.noise_std", &C::synthetic_noise_std),
            make_field("synthetic.query_size", &C::synthetic_query_size),
            make_field("synthetic.set", &C::synthetic_set),
            make_field("synthetic.support_size", &C::synthetic_support_size),
            make_field("synthetic.train_tasks_per_mode", &C::synthetic_train_tasks_per_mode),
            make_field("synthetic.x_max", &C::synthetic_x_max),
            make_field("synthetic.x_min", &C::synthetic_x_min),
            make_field("train.batch_size", &C::train_batch_size),
            make_field("train.episodes_per_entity", &C::train_episodes_per_entity),
            make_field("train.joint_epochs", &C::train_joint_epochs),
            make_field("train.lr", &C::train_lr),
            make_field("train.pretrain_batch_size", &C::train_pretrain_batch_size),
            make_field("train.pretrain_epochs", &C::train_pretrain_epochs),
            make_field("window.length", &C::window_length),
            make_field("window.stride", &C::window_stride),
        };
        f.push_back({"schema.drivers", [](C& c, const std::string& v) { c.schema.drivers = split_list(v); },
                     [](const C& c) { return csv::join(c.schema.drivers); }});
        f.push_back({"schema.response", [](C& c, const std::string& v) { c.schema.response = v; },
                     [](const C& c) { return c.schema.response; }});
        f.push_back({"schema.timestamp", [](C& c, const std::string& v) { c.schema.timestamp = v; },
                     [](const C& c) { return c.schema.timestamp; }});
        std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) { return a.key < b.key; });
        return f;
    }();
    return table;
}

}  // namespace manifest_detail

inline std::vector<std::string> manifest_keys() {
    std::vector<std::string> out;
    for (const auto& f : manifest_detail::fields()) out.push_back(f.key);
    return out;
}

/// Sets one key. Unknown keys are an error; nothing is silently ignored.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : manifest_detail::fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown manifest key '" + key + "'");
}

/// Range and enum checks applied after all settings are in.
inline void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (c.dataset_kind != "synthetic" && c.dataset_kind != "series") fail("dataset.kind must be 'synthetic' or 'series'");
    if (c.model_base != "mlp" && c.model_base != "lstm") fail("model.base must be 'mlp' or 'lstm'");
    if (c.synthetic_set < 1 || c.synthetic_set > 3) fail("synthetic.set must be 1, 2 or 3");
    if (c.synthetic_train_tasks_per_mode < 1 || c.synthetic_eval_tasks_per_mode < 1) fail("synthetic task counts must be >= 1");
    if (c.synthetic_support_size < 1 || c.synthetic_query_size < 1) fail("synthetic support/query sizes must be >= 1");
    if (c.synthetic_noise_std < 0.0) fail("synthetic.noise_std must be >= 0");
    if (!(c.synthetic_x_min < c.synthetic_x_max)) fail("synthetic.x_min must be below synthetic.x_max");
    if (c.window_length < 1 || c.window_stride < 1) fail("window.length and window.stride must be >= 1");
    if (!(c.support_fraction > 0.0 && c.support_fraction < 1.0)) fail("support.fraction must lie in (0, 1)");
    if (c.model_base_hidden < 1 || c.model_encoder_hidden < 1) fail("model sizes must be >= 1");
    if (c.model_base_layers < 1) fail("model.base_layers must be >= 1");
    if (c.train_batch_size < 1 || c.train_pretrain_batch_size < 1) fail("batch sizes must be >= 1");
    if (!(c.train_lr >= 0.0) || !(c.adapt_lr >= 0.0) || !(c.fomaml_inner_lr >= 0.0)) fail("learning rates must be >= 0");
    if (c.ensemble_size < 1) fail("ensemble.size must be >= 1");
    if (c.train_episodes_per_entity < 1) fail("train.episodes_per_entity must be >= 1");
    if (c.dataset_kind == "series") {
        if (c.dataset_path.empty()) fail("dataset.path is required for series data");
        if (c.schema.drivers.empty() || c.schema.response.empty()) fail("schema.drivers and schema.response are required for series data");
    }
}

/// Flat "key = value" text; '#' starts a comment line.
inline ExperimentConfig parse_manifest(std::istream& in, const std::string& source = "manifest") {
    ExperimentConfig cfg;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = csv::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ": line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = csv::trim(t.substr(0, eq));
        const std::string value = csv::trim(t.substr(eq + 1));
        if (seen.count(key)) {
            throw ConfigError(source + ": line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        seen[key] = lineno;
        try {
            apply_setting(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open manifest");
    return parse_manifest(in, path);
}

/// Canonical text: every key, sorted, one per line.
inline std::string manifest_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& f : manifest_detail::fields()) os << f.key << " = " << f.get(cfg) << '\n';
    return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash over every setting except the seed.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& f : manifest_detail::fields())
        if (f.key != "seed") os << f.key << '=' << f.get(cfg) << '\n';
    return fnv1a64(os.str());
}

/// Hash over the settings that determine trained weights (data, model,
/// training); adaptation and ensemble settings and the joint epoch budget
/// are excluded, so a checkpoint can be resumed with a larger budget.
inline std::uint64_t model_config_hash(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& f : manifest_detail::fields()) {
        const auto& k = f.key;
        const bool relevant = k.starts_with("dataset.") || k.starts_with("synthetic.") || k.starts_with("schema.") ||
                              k.starts_with("window.") || k.starts_with("support.") || k.starts_with("model.") ||
                              k.starts_with("train.");
        if (relevant && k != "train.joint_epochs" && k != "dataset.budget" && k != "dataset.eval_path" && k != "dataset.few_shot_length" &&
            k != "synthetic.eval_tasks_per_mode")
            os << k << '=' << f.get(cfg) << '\n';
    }
    return fnv1a64(os.str());
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

}  // namespace tamrl
