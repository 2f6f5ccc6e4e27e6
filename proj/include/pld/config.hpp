#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pld/theory.hpp"
#include "pld/trainer.hpp"

namespace pld {

// Minimal INI: [section] headers, key = value lines, full-line # or ;
// comments. Section and key order is preserved so parse -> serialize ->
// parse is the identity on the parsed structure.
struct IniFile {
    using Section = std::vector<std::pair<std::string, std::string>>;
    std::vector<std::pair<std::string, Section>> sections;

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static IniFile parse(const std::string& text) {
        IniFile ini;
        std::istringstream in(text);
        std::string line;
        long long line_no = 0;
        Section* current = nullptr;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']') {
                    throw std::runtime_error("config line " + std::to_string(line_no) +
                                             ": unterminated section header");
                }
                ini.sections.emplace_back(trim(t.substr(1, t.size() - 2)), Section{});
                current = &ini.sections.back().second;
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": expected key = value");
            }
            if (!current) {
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": key outside of any [section]");
            }
            current->emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
        return ini;
    }

    std::string serialize() const {
        std::string out;
        for (const auto& [name, entries] : sections) {
            out += "[" + name + "]\n";
            for (const auto& [k, v] : entries) {
                out += k + " = " + v + "\n";
            }
            out += "\n";
        }
        return out;
    }

    const Section* find_section(const std::string& name) const {
        for (const auto& [n, s] : sections) {
            if (n == name) return &s;
        }
        return nullptr;
    }
};

enum class DataSource { File, Synthetic };
enum class NoiseMode { None, Ratio, PerUser };

struct DatasetConfig {
    DataSource source = DataSource::Synthetic;
    std::string path;
    int num_users = 500;
    int num_items = 500;
    int latent_dim = 8;
    int per_user = 40;
    int min_degree = 1;
    double train_frac = 0.8;
    double val_frac = 0.1;
    NoiseMode noise_mode = NoiseMode::None;
    double noise_level = 0.0; // rho for ratio mode, per-user count otherwise
};

struct ModelConfig {
    int dim = 64;
    int layers = 0;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    ModelConfig model;
    TrainConfig train;
    std::vector<int> eval_k{20, 50};
    std::string out_dir = "runs/default";
    std::vector<std::int64_t> seeds{1};
    SweepSpec theory;
};

namespace detail {

inline int parse_int(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("expected integer for " + where + ", got '" + v + "'");
    }
}

inline std::int64_t parse_int64(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        const std::int64_t x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("expected integer for " + where + ", got '" + v + "'");
    }
}

inline double parse_double(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("expected number for " + where + ", got '" + v + "'");
    }
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& v, const std::string& where, Parse parse) {
    std::vector<T> out;
    std::string token;
    std::istringstream ss(v);
    while (std::getline(ss, token, ',')) {
        token = IniFile::trim(token);
        if (!token.empty()) out.push_back(parse(token, where));
    }
    if (out.empty()) {
        throw std::runtime_error("expected a comma-separated list for " + where);
    }
    return out;
}

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
    std::string s;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        if constexpr (std::is_floating_point_v<T>) {
            s += fmt(xs[i]);
        } else {
            s += std::to_string(xs[i]);
        }
    }
    return s;
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(const IniFile& ini) {
    ExperimentConfig cfg;
    for (const auto& [section, entries] : ini.sections) {
        for (const auto& [key, value] : entries) {
            const std::string where = "[" + section + "] " + key;
            auto unknown = [&]() -> std::runtime_error {
                return std::runtime_error("unknown config key: " + where);
            };
            if (section == "dataset") {
                if (key == "source") {
                    if (value == "file") cfg.dataset.source = DataSource::File;
                    else if (value == "synthetic") cfg.dataset.source = DataSource::Synthetic;
                    else throw std::runtime_error("bad dataset source '" + value + "'");
                } else if (key == "path") cfg.dataset.path = value;
                else if (key == "num_users") cfg.dataset.num_users = detail::parse_int(value, where);
                else if (key == "num_items") cfg.dataset.num_items = detail::parse_int(value, where);
                else if (key == "latent_dim") cfg.dataset.latent_dim = detail::parse_int(value, where);
                else if (key == "per_user") cfg.dataset.per_user = detail::parse_int(value, where);
                else if (key == "min_degree") cfg.dataset.min_degree = detail::parse_int(value, where);
                else if (key == "train_frac") cfg.dataset.train_frac = detail::parse_double(value, where);
                else if (key == "val_frac") cfg.dataset.val_frac = detail::parse_double(value, where);
                else if (key == "noise_mode") {
                    if (value == "none") cfg.dataset.noise_mode = NoiseMode::None;
                    else if (value == "ratio") cfg.dataset.noise_mode = NoiseMode::Ratio;
                    else if (value == "per_user") cfg.dataset.noise_mode = NoiseMode::PerUser;
                    else throw std::runtime_error("bad noise_mode '" + value + "'");
                } else if (key == "noise_level") cfg.dataset.noise_level = detail::parse_double(value, where);
                else throw unknown();
            } else if (section == "model") {
                if (key == "dim") cfg.model.dim = detail::parse_int(value, where);
                else if (key == "layers") cfg.model.layers = detail::parse_int(value, where);
                else throw unknown();
            } else if (section == "train") {
                if (key == "loss") {
                    if (value == "bpr") cfg.train.loss_kind = LossKind::BPR;
                    else if (value == "bce") cfg.train.loss_kind = LossKind::BCE;
                    else throw std::runtime_error("bad loss '" + value + "'");
                } else if (key == "denoiser") {
                    if (value == "none") cfg.train.denoiser = Denoiser::None;
                    else if (value == "pld") cfg.train.denoiser = Denoiser::PLD;
                    else if (value == "rce") cfg.train.denoiser = Denoiser::RCE;
                    else if (value == "tce") cfg.train.denoiser = Denoiser::TCE;
                    else throw std::runtime_error("bad denoiser '" + value + "'");
                } else if (key == "k") cfg.train.resample.k = detail::parse_int(value, where);
                else if (key == "tau") cfg.train.resample.tau = detail::parse_double(value, where);
                else if (key == "learning_rate") cfg.train.learning_rate = detail::parse_double(value, where);
                else if (key == "weight_decay") cfg.train.weight_decay = detail::parse_double(value, where);
                else if (key == "batch_size") cfg.train.batch_size = detail::parse_int(value, where);
                else if (key == "max_epochs") cfg.train.max_epochs = detail::parse_int(value, where);
                else if (key == "patience") cfg.train.patience = detail::parse_int(value, where);
                else if (key == "rce_beta") cfg.train.rce_beta = detail::parse_double(value, where);
                else if (key == "tce_max_drop_rate") cfg.train.tce.max_drop_rate = detail::parse_double(value, where);
                else if (key == "tce_ramp_epochs") cfg.train.tce.ramp_epochs = detail::parse_int(value, where);
                else throw unknown();
            } else if (section == "eval") {
                if (key == "k_values") {
                    cfg.eval_k = detail::parse_list<int>(value, where, detail::parse_int);
                } else throw unknown();
            } else if (section == "output") {
                if (key == "dir") cfg.out_dir = value;
                else throw unknown();
            } else if (section == "seeds") {
                if (key == "values") {
                    cfg.seeds = detail::parse_list<std::int64_t>(value, where, detail::parse_int64);
                } else throw unknown();
            } else if (section == "theory") {
                if (key == "n") cfg.theory.n_values = detail::parse_list<int>(value, where, detail::parse_int);
                else if (key == "m") cfg.theory.m_values = detail::parse_list<int>(value, where, detail::parse_int);
                else if (key == "delta_mu") cfg.theory.delta_mu_values = detail::parse_list<double>(value, where, detail::parse_double);
                else if (key == "sigma") cfg.theory.sigma_values = detail::parse_list<double>(value, where, detail::parse_double);
                else if (key == "k") cfg.theory.k_values = detail::parse_list<int>(value, where, detail::parse_int);
                else if (key == "tau") cfg.theory.tau_values = detail::parse_list<double>(value, where, detail::parse_double);
                else if (key == "mu1") cfg.theory.mu1 = detail::parse_double(value, where);
                else if (key == "trials") cfg.theory.trials = detail::parse_int64(value, where);
                else throw unknown();
            } else {
                throw std::runtime_error("unknown config section: [" + section + "]");
            }
        }
    }
    return cfg;
}

inline IniFile serialize_experiment_config(const ExperimentConfig& cfg) {
    using detail::fmt;
    using detail::fmt_list;
    IniFile ini;
    IniFile::Section dataset;
    dataset.emplace_back("source", cfg.dataset.source == DataSource::File ? "file" : "synthetic");
    if (cfg.dataset.source == DataSource::File) {
        dataset.emplace_back("path", cfg.dataset.path);
    } else {
        dataset.emplace_back("num_users", std::to_string(cfg.dataset.num_users));
        dataset.emplace_back("num_items", std::to_string(cfg.dataset.num_items));
        dataset.emplace_back("latent_dim", std::to_string(cfg.dataset.latent_dim));
        dataset.emplace_back("per_user", std::to_string(cfg.dataset.per_user));
    }
    dataset.emplace_back("min_degree", std::to_string(cfg.dataset.min_degree));
    dataset.emplace_back("train_frac", fmt(cfg.dataset.train_frac));
    dataset.emplace_back("val_frac", fmt(cfg.dataset.val_frac));
    dataset.emplace_back("noise_mode", cfg.dataset.noise_mode == NoiseMode::None
                                           ? "none"
                                           : cfg.dataset.noise_mode == NoiseMode::Ratio
                                                 ? "ratio"
                                                 : "per_user");
    dataset.emplace_back("noise_level", fmt(cfg.dataset.noise_level));
    ini.sections.emplace_back("dataset", std::move(dataset));

    IniFile::Section model;
    model.emplace_back("dim", std::to_string(cfg.model.dim));
    model.emplace_back("layers", std::to_string(cfg.model.layers));
    ini.sections.emplace_back("model", std::move(model));

    IniFile::Section train;
    train.emplace_back("loss", cfg.train.loss_kind == LossKind::BPR ? "bpr" : "bce");
    train.emplace_back("denoiser", denoiser_name(cfg.train.denoiser));
    train.emplace_back("k", std::to_string(cfg.train.resample.k));
    train.emplace_back("tau", fmt(cfg.train.resample.tau));
    train.emplace_back("learning_rate", fmt(cfg.train.learning_rate));
    train.emplace_back("weight_decay", fmt(cfg.train.weight_decay));
    train.emplace_back("batch_size", std::to_string(cfg.train.batch_size));
    train.emplace_back("max_epochs", std::to_string(cfg.train.max_epochs));
    train.emplace_back("patience", std::to_string(cfg.train.patience));
    train.emplace_back("rce_beta", fmt(cfg.train.rce_beta));
    train.emplace_back("tce_max_drop_rate", fmt(cfg.train.tce.max_drop_rate));
    train.emplace_back("tce_ramp_epochs", std::to_string(cfg.train.tce.ramp_epochs));
    ini.sections.emplace_back("train", std::move(train));

    IniFile::Section eval;
    eval.emplace_back("k_values", fmt_list(cfg.eval_k));
    ini.sections.emplace_back("eval", std::move(eval));

    IniFile::Section output;
    output.emplace_back("dir", cfg.out_dir);
    ini.sections.emplace_back("output", std::move(output));

    IniFile::Section seeds;
    seeds.emplace_back("values", fmt_list(cfg.seeds));
    ini.sections.emplace_back("seeds", std::move(seeds));

    IniFile::Section theory;
    theory.emplace_back("n", fmt_list(cfg.theory.n_values));
    theory.emplace_back("m", fmt_list(cfg.theory.m_values));
    theory.emplace_back("delta_mu", fmt_list(cfg.theory.delta_mu_values));
    theory.emplace_back("sigma", fmt_list(cfg.theory.sigma_values));
    theory.emplace_back("k", fmt_list(cfg.theory.k_values));
    theory.emplace_back("tau", fmt_list(cfg.theory.tau_values));
    theory.emplace_back("mu1", fmt(cfg.theory.mu1));
    theory.emplace_back("trials", std::to_string(cfg.theory.trials));
    ini.sections.emplace_back("theory", std::move(theory));
    return ini;
}

} // namespace pld
