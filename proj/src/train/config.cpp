#include "cpv/train/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace cpv::train {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> m = {
        {"mode",
         [](TrainConfig& c, const std::string& v) {
             auto mode = model::parse_mode(v);
             if (!mode) throw ConfigError("config: mode must be cpv, te or naive, got '" + v + "'");
             c.mode = *mode;
         }},
        {"lambda_hom", [](TrainConfig& c, const std::string& v) { c.lambda_hom = parse_number<double>("lambda_hom", v); }},
        {"lambda_pair", [](TrainConfig& c, const std::string& v) { c.lambda_pair = parse_number<double>("lambda_pair", v); }},
        {"embed_dim", [](TrainConfig& c, const std::string& v) { c.embed_dim = parse_number<int>("embed_dim", v); }},
        {"lr", [](TrainConfig& c, const std::string& v) { c.lr = parse_number<double>("lr", v); }},
        {"batch_size", [](TrainConfig& c, const std::string& v) { c.batch_size = parse_number<int>("batch_size", v); }},
        {"epochs", [](TrainConfig& c, const std::string& v) { c.epochs = parse_number<int>("epochs", v); }},
        {"steps_per_epoch",
         [](TrainConfig& c, const std::string& v) { c.steps_per_epoch = parse_number<int>("steps_per_epoch", v); }},
        {"seed", [](TrainConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
        {"dataset", [](TrainConfig& c, const std::string& v) { c.dataset = v; }},
        {"checkpoint", [](TrainConfig& c, const std::string& v) { c.checkpoint = v; }},
        {"metrics", [](TrainConfig& c, const std::string& v) { c.metrics = v; }},
        {"eval_every", [](TrainConfig& c, const std::string& v) { c.eval_every = parse_number<int>("eval_every", v); }},
        {"probe_batches",
         [](TrainConfig& c, const std::string& v) { c.probe_batches = parse_number<int>("probe_batches", v); }},
        {"accuracy_samples",
         [](TrainConfig& c, const std::string& v) { c.accuracy_samples = parse_number<int>("accuracy_samples", v); }},
    };
    return m;
}

}  // namespace

TrainConfig parse_config(const std::string& text) {
    TrainConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        it->second(cfg, value);
    }
    validate(cfg);
    return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const TrainConfig& c) {
    std::ostringstream o;
    o << "mode = " << model::to_string(c.mode) << '\n'
      << "lambda_hom = " << format_double(c.lambda_hom) << '\n'
      << "lambda_pair = " << format_double(c.lambda_pair) << '\n'
      << "embed_dim = " << c.embed_dim << '\n'
      << "lr = " << format_double(c.lr) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "epochs = " << c.epochs << '\n'
      << "steps_per_epoch = " << c.steps_per_epoch << '\n'
      << "seed = " << c.seed << '\n'
      << "dataset = " << c.dataset << '\n'
      << "checkpoint = " << c.checkpoint << '\n'
      << "metrics = " << c.metrics << '\n'
      << "eval_every = " << c.eval_every << '\n'
      << "probe_batches = " << c.probe_batches << '\n'
      << "accuracy_samples = " << c.accuracy_samples << '\n';
    return o.str();
}

void validate(const TrainConfig& c) {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (!(c.lambda_hom >= 0.0) || !std::isfinite(c.lambda_hom)) fail("lambda_hom must be >= 0");
    if (!(c.lambda_pair >= 0.0) || !std::isfinite(c.lambda_pair)) fail("lambda_pair must be >= 0");
    if (c.embed_dim < 1) fail("embed_dim must be positive");
    if (!(c.lr > 0.0) || !std::isfinite(c.lr)) fail("lr must be positive");
    if (c.batch_size < 1) fail("batch_size must be positive");
    if (c.epochs < 1) fail("epochs must be positive");
    if (c.steps_per_epoch < 0) fail("steps_per_epoch must be >= 0");
    if (c.eval_every < 1) fail("eval_every must be positive");
    if (c.probe_batches < 1) fail("probe_batches must be positive");
    if (c.accuracy_samples < 0) fail("accuracy_samples must be >= 0");
    if (c.dataset.empty()) fail("dataset is required");
    if (c.checkpoint.empty()) fail("checkpoint path is empty");
    if (c.metrics.empty()) fail("metrics path is empty");
}

}  // namespace cpv::train
