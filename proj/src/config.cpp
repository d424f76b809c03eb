#include "rdvla/config.hpp"

#include <fstream>
#include <sstream>

namespace rdvla {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad unsigned integer for " + key + ": '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(static_cast<int>(to_int(key, tok)));
    }
    return out;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

int SimSection::cap(int tier) const {
    switch (tier) {
        case 0: return cap0;
        case 1: return cap1;
        case 2: return cap2;
        default: throw ConfigError("sim: invalid tier " + std::to_string(tier));
    }
}

std::string stop_kind_name(StopKind k) { return k == StopKind::fixed ? "fixed" : "pure_kl"; }

StopKind stop_kind_from(const std::string& s) {
    if (s == "fixed") return StopKind::fixed;
    if (s == "pure_kl") return StopKind::pure_kl;
    throw ConfigError("config: unknown stop.kind '" + s + "' (fixed|pure_kl)");
}

std::string exec_kind_name(ExecKind k) {
    switch (k) {
        case ExecKind::full: return "full";
        case ExecKind::binary: return "binary";
        case ExecKind::linear_decay: return "linear_decay";
    }
    return "full";
}

ExecKind exec_kind_from(const std::string& s) {
    if (s == "full") return ExecKind::full;
    if (s == "binary") return ExecKind::binary;
    if (s == "linear_decay") return ExecKind::linear_decay;
    throw ConfigError("config: unknown exec.kind '" + s + "' (full|binary|linear_decay)");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "encoder.d_model") cfg.encoder.d_model = to_int(key, val);
        else if (key == "encoder.layers") cfg.encoder.layers = to_int(key, val);
        else if (key == "encoder.heads") cfg.encoder.heads = to_int(key, val);
        else if (key == "encoder.n_latent") cfg.encoder.n_latent = to_int(key, val);
        else if (key == "encoder.n_entity_max") cfg.encoder.n_entity_max = to_int(key, val);
        else if (key == "encoder.mid_layer") cfg.encoder.mid_layer = to_int(key, val);
        else if (key == "head.k_queries") cfg.head.k_queries = to_int(key, val);
        else if (key == "head.d_model") cfg.head.d_model = to_int(key, val);
        else if (key == "head.heads") cfg.head.heads = to_int(key, val);
        else if (key == "head.max_iters") cfg.head.max_iters = to_int(key, val);
        else if (key == "head.gamma_init") cfg.head.gamma_init = to_double(key, val);
        else if (key == "head.sigma_init") cfg.head.sigma_init = to_double(key, val);
        else if (key == "head.trunc") cfg.head.trunc = to_double(key, val);
        else if (key == "head.action_dim") cfg.head.action_dim = to_int(key, val);
        else if (key == "head.horizon") cfg.head.horizon = to_int(key, val);
        else if (key == "train.tbptt_window") cfg.train.tbptt_window = to_int(key, val);
        else if (key == "train.batch_size") cfg.train.batch_size = to_int(key, val);
        else if (key == "train.learning_rate") cfg.train.learning_rate = to_double(key, val);
        else if (key == "train.weight_decay") cfg.train.weight_decay = to_double(key, val);
        else if (key == "train.steps") cfg.train.steps = to_int(key, val);
        else if (key == "train.grad_clip_norm") cfg.train.grad_clip_norm = to_double(key, val);
        else if (key == "train.seed") cfg.train.seed = to_u64(key, val);
        else if (key == "train.checkpoint_every") cfg.train.checkpoint_every = to_int(key, val);
        else if (key == "sampler.mu_rec") cfg.sampler.mu_rec = to_double(key, val);
        else if (key == "sampler.sigma") cfg.sampler.sigma = to_double(key, val);
        else if (key == "sampler.seed") cfg.sampler.seed = to_u64(key, val);
        else if (key == "stop.kind") cfg.stop.kind = stop_kind_from(val);
        else if (key == "stop.fixed_r") cfg.stop.fixed_r = to_int(key, val);
        else if (key == "stop.delta") cfg.stop.delta = to_double(key, val);
        else if (key == "stop.min_iters") cfg.stop.min_iters = to_int(key, val);
        else if (key == "stop.max_iters") cfg.stop.max_iters = to_int(key, val);
        else if (key == "exec.kind") cfg.exec.kind = exec_kind_from(val);
        else if (key == "exec.tau") cfg.exec.tau = to_int(key, val);
        else if (key == "exec.h_long") cfg.exec.h_long = to_int(key, val);
        else if (key == "exec.h_short") cfg.exec.h_short = to_int(key, val);
        else if (key == "exec.tau_base") cfg.exec.tau_base = to_int(key, val);
        else if (key == "exec.h_max") cfg.exec.h_max = to_int(key, val);
        else if (key == "exec.h_min") cfg.exec.h_min = to_int(key, val);
        else if (key == "sim.tiers") cfg.sim.tiers = to_int_list(key, val);
        else if (key == "sim.eval_seeds") cfg.sim.eval_seeds = to_int(key, val);
        else if (key == "sim.eval_seed_base") cfg.sim.eval_seed_base = to_u64(key, val);
        else if (key == "sim.cap0") cfg.sim.cap0 = to_int(key, val);
        else if (key == "sim.cap1") cfg.sim.cap1 = to_int(key, val);
        else if (key == "sim.cap2") cfg.sim.cap2 = to_int(key, val);
        else if (key == "sim.demo_episodes") cfg.sim.demo_episodes = to_int(key, val);
        else if (key == "sim.demo_seed") cfg.sim.demo_seed = to_u64(key, val);
        else if (key == "sim.demo_stride") cfg.sim.demo_stride = to_int(key, val);
        else if (key == "sim.demo_cache") cfg.sim.demo_cache = val;
        else if (key == "output.dir") cfg.output.dir = val;
        else throw ConfigError("config: unknown key '" + key + "' at line " +
                               std::to_string(lineno));
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errs;
    auto collect = [&errs](const char* field, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            errs.push_back(std::string(field) + ": " + e.what());
        }
    };
    collect("encoder", [&] { encoder.validate(); });
    collect("head", [&] { head.validate(); });
    collect("train", [&] { train.validate(); });
    collect("stop", [&] { stop.validate(head.max_iters); });
    collect("exec", [&] { exec.validate(head.horizon); });
    if (encoder.d_model != head.d_model) {
        errs.push_back("encoder.d_model/head.d_model: widths differ (" +
                       std::to_string(encoder.d_model) + " vs " + std::to_string(head.d_model) +
                       ")");
    }
    if (head.action_dim != kSimActionDim) {
        errs.push_back("head.action_dim: simulator control is " +
                       std::to_string(kSimActionDim) + "-dimensional, got " +
                       std::to_string(head.action_dim));
    }
    if (sim.tiers.empty()) errs.push_back("sim.tiers: empty tier list");
    for (int t : sim.tiers) {
        if (t < 0 || t > 2) errs.push_back("sim.tiers: invalid tier " + std::to_string(t));
    }
    if (sim.eval_seeds < 1) errs.push_back("sim.eval_seeds: must be >= 1");
    if (sim.demo_episodes < 1) errs.push_back("sim.demo_episodes: must be >= 1");
    if (sim.demo_stride < 1) errs.push_back("sim.demo_stride: must be >= 1");
    if (sim.cap0 < 1 || sim.cap1 < 1 || sim.cap2 < 1) {
        errs.push_back("sim.cap0/cap1/cap2: episode caps must be >= 1");
    }
    if (sampler.mu_rec <= 0) errs.push_back("sampler.mu_rec: must be positive");
    if (sampler.sigma < 0) errs.push_back("sampler.sigma: must be non-negative");
    if (output.dir.empty()) errs.push_back("output.dir: empty");
    if (!errs.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(errs.size()) + " issues):";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
}

std::string ExperimentConfig::dump() const {
    std::ostringstream os;
    os << "encoder.d_model = " << encoder.d_model << "\n";
    os << "encoder.layers = " << encoder.layers << "\n";
    os << "encoder.heads = " << encoder.heads << "\n";
    os << "encoder.n_latent = " << encoder.n_latent << "\n";
    os << "encoder.n_entity_max = " << encoder.n_entity_max << "\n";
    os << "encoder.mid_layer = " << encoder.mid_layer << "\n";
    os << "head.k_queries = " << head.k_queries << "\n";
    os << "head.d_model = " << head.d_model << "\n";
    os << "head.heads = " << head.heads << "\n";
    os << "head.max_iters = " << head.max_iters << "\n";
    os << "head.gamma_init = " << fmt_double(head.gamma_init) << "\n";
    os << "head.sigma_init = " << fmt_double(head.sigma_init) << "\n";
    os << "head.trunc = " << fmt_double(head.trunc) << "\n";
    os << "head.action_dim = " << head.action_dim << "\n";
    os << "head.horizon = " << head.horizon << "\n";
    os << "train.tbptt_window = " << train.tbptt_window << "\n";
    os << "train.batch_size = " << train.batch_size << "\n";
    os << "train.learning_rate = " << fmt_double(train.learning_rate) << "\n";
    os << "train.weight_decay = " << fmt_double(train.weight_decay) << "\n";
    os << "train.steps = " << train.steps << "\n";
    os << "train.grad_clip_norm = " << fmt_double(train.grad_clip_norm) << "\n";
    os << "train.seed = " << train.seed << "\n";
    os << "train.checkpoint_every = " << train.checkpoint_every << "\n";
    os << "sampler.mu_rec = " << fmt_double(sampler.mu_rec) << "\n";
    os << "sampler.sigma = " << fmt_double(sampler.sigma) << "\n";
    os << "sampler.seed = " << sampler.seed << "\n";
    os << "stop.kind = " << stop_kind_name(stop.kind) << "\n";
    os << "stop.fixed_r = " << stop.fixed_r << "\n";
    os << "stop.delta = " << fmt_double(stop.delta) << "\n";
    os << "stop.min_iters = " << stop.min_iters << "\n";
    os << "stop.max_iters = " << stop.max_iters << "\n";
    os << "exec.kind = " << exec_kind_name(exec.kind) << "\n";
    os << "exec.tau = " << exec.tau << "\n";
    os << "exec.h_long = " << exec.h_long << "\n";
    os << "exec.h_short = " << exec.h_short << "\n";
    os << "exec.tau_base = " << exec.tau_base << "\n";
    os << "exec.h_max = " << exec.h_max << "\n";
    os << "exec.h_min = " << exec.h_min << "\n";
    os << "sim.tiers = ";
    for (std::size_t i = 0; i < sim.tiers.size(); ++i) {
        os << (i ? "," : "") << sim.tiers[i];
    }
    os << "\n";
    os << "sim.eval_seeds = " << sim.eval_seeds << "\n";
    os << "sim.eval_seed_base = " << sim.eval_seed_base << "\n";
    os << "sim.cap0 = " << sim.cap0 << "\n";
    os << "sim.cap1 = " << sim.cap1 << "\n";
    os << "sim.cap2 = " << sim.cap2 << "\n";
    os << "sim.demo_episodes = " << sim.demo_episodes << "\n";
    os << "sim.demo_seed = " << sim.demo_seed << "\n";
    os << "sim.demo_stride = " << sim.demo_stride << "\n";
    if (!sim.demo_cache.empty()) os << "sim.demo_cache = " << sim.demo_cache << "\n";
    os << "output.dir = " << output.dir << "\n";
    return os.str();
}

}  // namespace rdvla
