#include "pg/run_config.hpp"

#include <fstream>
#include <sstream>

namespace pg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& v, const std::string& key, const std::string& where) {
    try {
        std::size_t pos = 0;
        std::uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw ConfigError(where + ": invalid integer for " + key + ": `" + v + "`");
    }
}

double parse_f64(const std::string& v, const std::string& key, const std::string& where) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw ConfigError(where + ": invalid number for " + key + ": `" + v + "`");
    }
}

bool parse_bool(const std::string& v, const std::string& key, const std::string& where) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(where + ": invalid bool for " + key + ": `" + v + "`");
}

std::vector<std::size_t> parse_list(const std::string& v, const std::string& key,
                                    const std::string& where) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_u64(trim(item), key, where));
    if (out.empty()) throw ConfigError(where + ": empty list for " + key);
    return out;
}

std::string list_str(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

std::string f64_str(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value, const std::string& where) {
    if (key == "seed") seed = parse_u64(value, key, where);
    else if (key == "out") out_dir = value;
    else if (key == "data.train_dir") train_dir = value;
    else if (key == "data.val_dir") val_dir = value;
    else if (key == "gen.count") gen_count = parse_u64(value, key, where);
    else if (key == "net.k") net.k = parse_u64(value, key, where);
    else if (key == "net.encoder_widths") net.encoder_widths = parse_list(value, key, where);
    else if (key == "net.downsample_ratios") net.downsample_ratios = parse_list(value, key, where);
    else if (key == "net.fa_depth_input") net.fa_depth_input = parse_u64(value, key, where);
    else if (key == "net.fa_depth_bottleneck") net.fa_depth_bottleneck = parse_u64(value, key, where);
    else if (key == "net.local_repetition") net.local_repetition = parse_u64(value, key, where);
    else if (key == "net.num_classes") net.num_classes = parse_u64(value, key, where);
    else if (key == "net.dropout_rate") net.dropout_rate = parse_f64(value, key, where);
    else if (key == "net.head_widths") net.head_widths = parse_list(value, key, where);
    else if (key == "net.input_feature_dim") net.input_feature_dim = parse_u64(value, key, where);
    else if (key == "net.test_mode") net.test_mode = parse_bool(value, key, where);
    else if (key == "net.use_feature_augmenter") net.use_feature_augmenter = parse_bool(value, key, where);
    else if (key == "train.epochs") train.epochs = parse_u64(value, key, where);
    else if (key == "train.lr0") train.lr0 = parse_f64(value, key, where);
    else if (key == "train.decay") train.decay = parse_f64(value, key, where);
    else if (key == "train.beta1") train.adam_beta1 = parse_f64(value, key, where);
    else if (key == "train.beta2") train.adam_beta2 = parse_f64(value, key, where);
    else if (key == "train.eps") train.adam_eps = parse_f64(value, key, where);
    else if (key == "train.class_weighted") train.class_weighted = parse_bool(value, key, where);
    else if (key == "train.checkpoint_every") train.checkpoint_every = parse_u64(value, key, where);
    else if (key == "scene.extent") scene.extent = parse_f64(value, key, where);
    else if (key == "scene.point_density") scene.point_density = parse_f64(value, key, where);
    else if (key == "scene.pothole_count") scene.pothole_count = parse_u64(value, key, where);
    else if (key == "scene.radius_min") scene.radius_min = parse_f64(value, key, where);
    else if (key == "scene.radius_max") scene.radius_max = parse_f64(value, key, where);
    else if (key == "scene.depth_min") scene.depth_min = parse_f64(value, key, where);
    else if (key == "scene.depth_max") scene.depth_max = parse_f64(value, key, where);
    else if (key == "scene.roughness") scene.roughness = parse_f64(value, key, where);
    else if (key == "scene.noise_sigma") scene.noise_sigma = parse_f64(value, key, where);
    else throw ConfigError(where + ": unknown key `" + key + "`");
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str(), path);
}

std::string RunConfig::echo() const {
    std::ostringstream os;
    os << "seed = " << seed << "\n";
    os << "out = " << out_dir << "\n";
    os << "data.train_dir = " << train_dir << "\n";
    os << "data.val_dir = " << val_dir << "\n";
    os << "gen.count = " << gen_count << "\n";
    os << "net.k = " << net.k << "\n";
    os << "net.encoder_widths = " << list_str(net.encoder_widths) << "\n";
    os << "net.downsample_ratios = " << list_str(net.downsample_ratios) << "\n";
    os << "net.fa_depth_input = " << net.fa_depth_input << "\n";
    os << "net.fa_depth_bottleneck = " << net.fa_depth_bottleneck << "\n";
    os << "net.local_repetition = " << net.local_repetition << "\n";
    os << "net.num_classes = " << net.num_classes << "\n";
    os << "net.dropout_rate = " << f64_str(net.dropout_rate) << "\n";
    os << "net.head_widths = " << list_str(net.head_widths) << "\n";
    os << "net.input_feature_dim = " << net.input_feature_dim << "\n";
    os << "net.test_mode = " << (net.test_mode ? "true" : "false") << "\n";
    os << "net.use_feature_augmenter = " << (net.use_feature_augmenter ? "true" : "false") << "\n";
    os << "train.epochs = " << train.epochs << "\n";
    os << "train.lr0 = " << f64_str(train.lr0) << "\n";
    os << "train.decay = " << f64_str(train.decay) << "\n";
    os << "train.beta1 = " << f64_str(train.adam_beta1) << "\n";
    os << "train.beta2 = " << f64_str(train.adam_beta2) << "\n";
    os << "train.eps = " << f64_str(train.adam_eps) << "\n";
    os << "train.class_weighted = " << (train.class_weighted ? "true" : "false") << "\n";
    os << "train.checkpoint_every = " << train.checkpoint_every << "\n";
    os << "scene.extent = " << f64_str(scene.extent) << "\n";
    os << "scene.point_density = " << f64_str(scene.point_density) << "\n";
    os << "scene.pothole_count = " << scene.pothole_count << "\n";
    os << "scene.radius_min = " << f64_str(scene.radius_min) << "\n";
    os << "scene.radius_max = " << f64_str(scene.radius_max) << "\n";
    os << "scene.depth_min = " << f64_str(scene.depth_min) << "\n";
    os << "scene.depth_max = " << f64_str(scene.depth_max) << "\n";
    os << "scene.roughness = " << f64_str(scene.roughness) << "\n";
    os << "scene.noise_sigma = " << f64_str(scene.noise_sigma) << "\n";
    return os.str();
}

} // namespace pg
