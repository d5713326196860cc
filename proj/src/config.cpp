#include "sceneflow/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include "sceneflow/core/error.hpp"

namespace sf {

namespace {

using FieldRef = std::variant<int*, double*, bool*, std::string*, std::uint64_t*, std::vector<int>*,
                              std::vector<double>*>;

struct Binding {
    const char* section;
    const char* key;
    FieldRef ref;
};

std::vector<Binding> bindings(Config& c) {
    return {
        {"model", "levels", &c.model.levels},
        {"model", "level_sizes", &c.model.level_sizes},
        {"model", "feature_widths", &c.model.feature_widths},
        {"model", "backbone_k", &c.model.backbone_k},
        {"model", "pointconv_weight_hidden", &c.model.pointconv_weight_hidden},
        {"model", "leaky_slope", &c.model.leaky_slope},
        {"model", "d_a", &c.model.d_a},
        {"model", "heads", &c.model.heads},
        {"model", "pe_mlp_width", &c.model.pe_mlp_width},
        {"model", "d_g", &c.model.d_g},
        {"model", "w_aggregation", &c.model.w_aggregation},
        {"model", "str_k", &c.model.str_k},
        {"model", "str_hidden", &c.model.str_hidden},
        {"model", "lm_pe_width", &c.model.lm_pe_width},
        {"model", "lfe_k_target", &c.model.lfe_k_target},
        {"model", "lfe_k_self", &c.model.lfe_k_self},
        {"model", "cost_hidden", &c.model.cost_hidden},
        {"model", "dir_hidden", &c.model.dir_hidden},
        {"model", "fp_k", &c.model.fp_k},
        {"model", "fp_pointconv_width", &c.model.fp_pointconv_width},
        {"model", "fp_mlp_width", &c.model.fp_mlp_width},
        {"model", "idw_k", &c.model.idw_k},
        {"model", "idw_eps", &c.model.idw_eps},
        {"model", "use_gf", &c.model.use_gf},
        {"model", "use_str_spatial", &c.model.use_str_spatial},
        {"model", "use_str_temporal", &c.model.use_str_temporal},
        {"loss", "deltas", &c.loss.deltas},
        {"loss", "lambda1", &c.loss.lambda1},
        {"loss", "lambda2", &c.loss.lambda2},
        {"loss", "lambda3", &c.loss.lambda3},
        {"loss", "radius", &c.loss.radius},
        {"loss", "th", &c.loss.th},
        {"loss", "k", &c.loss.k},
        {"loss", "cos_eps", &c.loss.cos_eps},
        {"loss", "use_lfc", &c.loss.use_lfc},
        {"loss", "use_cfs", &c.loss.use_cfs},
        {"loss", "cfs_use_updated_target", &c.loss.cfs_use_updated_target},
        {"train", "learning_rate", &c.train.learning_rate},
        {"train", "decay_every", &c.train.decay_every},
        {"train", "decay_factor", &c.train.decay_factor},
        {"train", "batch_size", &c.train.batch_size},
        {"train", "epochs", &c.train.epochs},
        {"train", "seed", &c.train.seed},
        {"train", "beta1", &c.train.beta1},
        {"train", "beta2", &c.train.beta2},
        {"train", "weight_decay", &c.train.weight_decay},
        {"train", "precision", &c.train.precision},
        {"train", "grad_clip", &c.train.grad_clip},
        {"train", "patience", &c.train.patience},
        {"train", "workers", &c.train.workers},
        {"train", "resample_per_epoch", &c.train.resample_per_epoch},
        {"synth", "object_count", &c.synth.object_count},
        {"synth", "points_per_object", &c.synth.points_per_object},
        {"synth", "rotation_max", &c.synth.rotation_max},
        {"synth", "translation_max", &c.synth.translation_max},
        {"synth", "noise_sigma", &c.synth.noise_sigma},
        {"synth", "occlusion_fraction", &c.synth.occlusion_fraction},
        {"synth", "seed", &c.synth.seed},
    };
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
    return std::string(buf, end);
}

std::string render(const FieldRef& ref) {
    if (auto p = std::get_if<int*>(&ref)) return std::to_string(**p);
    if (auto p = std::get_if<double*>(&ref)) return fmt_double(**p);
    if (auto p = std::get_if<bool*>(&ref)) return **p ? "true" : "false";
    if (auto p = std::get_if<std::string*>(&ref)) return **p;
    if (auto p = std::get_if<std::uint64_t*>(&ref)) return std::to_string(**p);
    if (auto p = std::get_if<std::vector<int>*>(&ref)) {
        std::string out;
        for (std::size_t i = 0; i < (*p)->size(); ++i) out += (i ? "," : "") + std::to_string((**p)[i]);
        return out;
    }
    auto p = std::get<std::vector<double>*>(ref);
    std::string out;
    for (std::size_t i = 0; i < p->size(); ++i) out += (i ? "," : "") + fmt_double((*p)[i]);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("config: bad numeric value '" + s + "' for " + where);
    }
}

void assign(const FieldRef& ref, const std::string& raw, const std::string& where) {
    const std::string value = trim(raw);
    if (auto p = std::get_if<int*>(&ref)) {
        **p = static_cast<int>(parse_double(value, where));
        return;
    }
    if (auto p = std::get_if<double*>(&ref)) {
        **p = parse_double(value, where);
        return;
    }
    if (auto p = std::get_if<bool*>(&ref)) {
        if (value == "true") **p = true;
        else if (value == "false") **p = false;
        else throw DataError("config: bad boolean '" + value + "' for " + where);
        return;
    }
    if (auto p = std::get_if<std::string*>(&ref)) {
        **p = value;
        return;
    }
    if (auto p = std::get_if<std::uint64_t*>(&ref)) {
        **p = static_cast<std::uint64_t>(parse_double(value, where));
        return;
    }
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    if (auto p = std::get_if<std::vector<int>*>(&ref)) {
        (*p)->clear();
        for (const auto& s : parts) (*p)->push_back(static_cast<int>(parse_double(s, where)));
        return;
    }
    auto p = std::get<std::vector<double>*>(ref);
    p->clear();
    for (const auto& s : parts) p->push_back(parse_double(s, where));
}

}  // namespace

Config Config::paper_profile() {
    Config c;
    c.model.levels = 5;
    c.model.level_sizes = {8192, 2048, 512, 256, 64};
    c.model.feature_widths = {32, 64, 128, 256, 512};
    c.model.backbone_k = 16;
    c.model.d_a = 128;
    c.model.heads = 8;
    c.model.d_g = 128;
    c.model.str_k = 16;
    c.model.lfe_k_target = 16;
    c.model.lfe_k_self = 16;
    c.model.fp_k = 16;
    c.model.fp_pointconv_width = 128;
    c.model.fp_mlp_width = 128;
    c.loss.radius = 0.05;  // metric scans
    c.train.epochs = 900;
    return c;
}

std::string Config::to_text() const {
    auto& self = const_cast<Config&>(*this);
    auto binds = bindings(self);
    std::string out;
    std::string current;
    for (const auto& b : binds) {
        if (current != b.section) {
            if (!out.empty()) out += "\n";
            current = b.section;
            out += "[" + current + "]\n";
        }
        out += std::string(b.key) + " = " + render(b.ref) + "\n";
    }
    return out;
}

Config Config::from_text(const std::string& text) {
    Config c;
    auto binds = bindings(c);
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw DataError("config: malformed section header at line " + std::to_string(lineno));
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw DataError("config: expected 'key = value' at line " + std::to_string(lineno));
        const std::string key = trim(s.substr(0, eq));
        const std::string value = s.substr(eq + 1);
        bool found = false;
        for (const auto& b : binds) {
            if (section == b.section && key == b.key) {
                assign(b.ref, value, section + "." + key);
                found = true;
                break;
            }
        }
        if (!found) throw DataError("config: unknown key '" + section + "." + key + "'");
    }
    c.validate();
    return c;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

void Config::save(const std::string& path) const {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("config: cannot write " + tmp);
        out << to_text();
    }
    std::filesystem::rename(tmp, path);
}

std::string Config::fingerprint() const {
    const std::string text = to_text();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Config::validate() const {
    if (model.levels < 2) throw DataError("config: model.levels must be >= 2");
    if (static_cast<int>(model.level_sizes.size()) != model.levels)
        throw DataError("config: model.level_sizes must list one size per level");
    if (static_cast<int>(model.feature_widths.size()) != model.levels)
        throw DataError("config: model.feature_widths must list one width per level");
    for (int l = 1; l < model.levels; ++l)
        if (model.level_sizes[l] >= model.level_sizes[l - 1])
            throw DataError("config: level sizes must strictly decrease");
    if (model.d_a % model.heads != 0) throw DataError("config: d_a must be divisible by heads");
    if (model.w_aggregation != "attentive" && model.w_aggregation != "maxpool")
        throw DataError("config: w_aggregation must be attentive or maxpool");
    if (static_cast<int>(loss.deltas.size()) < model.levels)
        throw DataError("config: loss.deltas must cover every level");
    for (double d : loss.deltas)
        if (!(d > 0)) throw DataError("config: loss.deltas must be positive");
    if (loss.lambda1 < 0 || loss.lambda2 < 0 || loss.lambda3 < 0)
        throw DataError("config: loss lambdas must be non-negative");
    if (!(loss.th > 0 && loss.th <= 1)) throw DataError("config: loss.th must be in (0, 1]");
    if (!(loss.radius > 0)) throw DataError("config: loss.radius must be positive");
    if (!(train.learning_rate > 0)) throw DataError("config: train.learning_rate must be positive");
    if (!(train.decay_factor > 0 && train.decay_factor <= 1))
        throw DataError("config: train.decay_factor must be in (0, 1]");
    if (train.precision != "double" && train.precision != "single")
        throw DataError("config: train.precision must be double or single");
    if (!(synth.occlusion_fraction >= 0 && synth.occlusion_fraction < 1))
        throw DataError("config: synth.occlusion_fraction must be in [0, 1)");
    if (synth.rotation_max < 0 || synth.translation_max < 0 || synth.noise_sigma < 0)
        throw DataError("config: synth motion/noise bounds must be non-negative");
}

}  // namespace sf
