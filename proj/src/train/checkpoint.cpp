#include "sceneflow/train/checkpoint.hpp"

#include <json.hpp>

#include "sceneflow/core/error.hpp"
#include "sceneflow/data/archive.hpp"

namespace sf::train {

namespace {

using nlohmann::json;
using sf::data::Dtype;
using sf::data::NamedArray;

std::vector<double> quantize_single(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(static_cast<float>(v[i]));
    return out;
}

NamedArray value_array(const std::string& name, const std::vector<double>& v, bool single) {
    if (single) {
        std::vector<float> f(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
        return NamedArray::from_f32(name, f, {v.size()});
    }
    return NamedArray::from_f64(name, v, {v.size()});
}

std::vector<double> read_values(const NamedArray& a) {
    if (a.dtype == Dtype::f32) {
        auto f = a.as_f32();
        return {f.begin(), f.end()};
    }
    return a.as_f64();
}

}  // namespace

Checkpoint Checkpoint::capture(const model::Network& net, const Adam* optimizer, int epoch,
                               double best_val_epe, std::vector<EpochLog> history) {
    Checkpoint ck;
    ck.config = net.config();
    const bool single = ck.config.train.precision == "single";
    for (const auto& name : net.params().names()) {
        const auto& v = net.params().get(name).data();
        ck.params.push_back(single ? quantize_single(v) : v);
    }
    if (optimizer) {
        ck.adam_t = optimizer->t();
        ck.adam_m = optimizer->m();
        ck.adam_v = optimizer->v();
    }
    ck.epoch = epoch;
    ck.best_val_epe = best_val_epe;
    ck.history = std::move(history);
    return ck;
}

void Checkpoint::apply_params(model::Network& net) const {
    const auto& names = net.params().names();
    if (names.size() != params.size())
        throw DataError("checkpoint: parameter count does not match the network (config mismatch)");
    for (std::size_t i = 0; i < names.size(); ++i) {
        Tensor t = net.params().get(names[i]);
        if (t.size() != params[i].size())
            throw DataError("checkpoint: shape mismatch for parameter " + names[i]);
        t.mutable_data() = params[i];
    }
}

void Checkpoint::apply_optimizer(Adam& optimizer) const {
    if (!adam_m.empty()) optimizer.restore(adam_t, adam_m, adam_v);
}

void Checkpoint::save(const std::string& path) const {
    const bool single = config.train.precision == "single";
    std::vector<NamedArray> arrays;

    json meta;
    meta["epoch"] = epoch;
    meta["adam_t"] = adam_t;
    meta["best_val_epe"] = best_val_epe;
    meta["config"] = config.to_text();
    meta["config_fingerprint"] = config.fingerprint();
    meta["param_count"] = params.size();
    meta["has_optimizer"] = !adam_m.empty();
    json hist = json::array();
    for (const auto& h : history)
        hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_epe3d", h.val_epe3d}, {"lr", h.lr}});
    meta["history"] = hist;
    const std::string meta_str = meta.dump();
    arrays.push_back(NamedArray::from_u8(
        "meta", std::vector<std::uint8_t>(meta_str.begin(), meta_str.end()), {meta_str.size()}));

    for (std::size_t i = 0; i < params.size(); ++i)
        arrays.push_back(value_array("p" + std::to_string(i), params[i], single));
    for (std::size_t i = 0; i < adam_m.size(); ++i) {
        arrays.push_back(value_array("m" + std::to_string(i), adam_m[i], false));
        arrays.push_back(value_array("v" + std::to_string(i), adam_v[i], false));
    }
    data::write_archive(path, arrays);
}

Checkpoint Checkpoint::load(const std::string& path) {
    auto arrays = data::read_archive(path);
    const auto* meta_arr = data::find_array(arrays, "meta");
    if (!meta_arr) throw DataError("checkpoint: missing 'meta' record in " + path);
    json meta;
    try {
        const auto bytes = meta_arr->as_u8();
        meta = json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const json::exception& e) {
        throw DataError("checkpoint: malformed 'meta' record: " + std::string(e.what()));
    }

    Checkpoint ck;
    ck.config = Config::from_text(meta.at("config").get<std::string>());
    ck.epoch = meta.at("epoch").get<int>();
    ck.adam_t = meta.at("adam_t").get<long long>();
    ck.best_val_epe = meta.at("best_val_epe").get<double>();
    for (const auto& h : meta.at("history")) {
        EpochLog log;
        log.epoch = h.at("epoch").get<int>();
        log.train_loss = h.at("train_loss").get<double>();
        log.val_epe3d = h.at("val_epe3d").get<double>();
        log.lr = h.at("lr").get<double>();
        ck.history.push_back(log);
    }

    const auto param_count = meta.at("param_count").get<std::size_t>();
    const bool has_opt = meta.at("has_optimizer").get<bool>();
    for (std::size_t i = 0; i < param_count; ++i) {
        const auto* a = data::find_array(arrays, "p" + std::to_string(i));
        if (!a) throw DataError("checkpoint: missing parameter array p" + std::to_string(i));
        ck.params.push_back(read_values(*a));
    }
    if (has_opt) {
        for (std::size_t i = 0; i < param_count; ++i) {
            const auto* m = data::find_array(arrays, "m" + std::to_string(i));
            const auto* v = data::find_array(arrays, "v" + std::to_string(i));
            if (!m || !v) throw DataError("checkpoint: missing optimizer state for parameter " + std::to_string(i));
            ck.adam_m.push_back(read_values(*m));
            ck.adam_v.push_back(read_values(*v));
        }
    }
    return ck;
}

}  // namespace sf::train
