#include "seqteach/checkpoint.hpp"

#include <cstdio>

#include "seqteach/error.hpp"
#include "seqteach/io.hpp"

namespace seqteach {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "seqteach-checkpoint";

std::vector<double> doubles(const json& j, const char* key, std::size_t expected) {
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != expected) {
        throw DataError(std::string("checkpoint field '") + key + "' has " + std::to_string(v.size()) +
                        " values, expected " + std::to_string(expected));
    }
    return v;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

void save(const std::filesystem::path& path, std::string_view kind, json payload, json context) {
    json doc;
    doc["format"] = kFormat;
    doc["version"] = kCheckpointVersion;
    doc["kind"] = kind;
    doc["checksum"] = hex64(fnv1a64(payload.dump()));
    doc["payload"] = std::move(payload);
    doc["context"] = std::move(context);
    write_text_file(path, doc.dump(1) + "\n");
}

std::pair<json, json> load(const std::filesystem::path& path, std::string_view kind) {
    const std::string text = read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error&) {
        throw DataError("checkpoint '" + path.string() + "' is truncated or not valid JSON");
    }
    try {
        if (doc.at("format").get<std::string>() != kFormat) throw DataError("'" + path.string() + "' is not a checkpoint");
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
        }
        if (doc.at("kind").get<std::string>() != kind) {
            throw DataError("checkpoint '" + path.string() + "' holds a " + doc.at("kind").get<std::string>() +
                            " state, expected " + std::string(kind));
        }
        const json& payload = doc.at("payload");
        if (doc.at("checksum").get<std::string>() != hex64(fnv1a64(payload.dump()))) {
            throw DataError("checkpoint '" + path.string() + "' failed its checksum");
        }
        json context = doc.contains("context") ? doc["context"] : json::object();
        return {payload, std::move(context)};
    } catch (const json::exception& e) {
        throw DataError("checkpoint '" + path.string() + "' is malformed: " + e.what());
    }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json to_json(const LearnerState& s) {
    return json{
        {"shape", {{"inputs", s.shape.inputs}, {"hidden", s.shape.hidden}, {"outputs", s.shape.outputs}}},
        {"hyper", {{"learning_rate", s.hyper.learning_rate}, {"momentum", s.hyper.momentum}}},
        {"w1", s.w1}, {"b1", s.b1}, {"w2", s.w2}, {"b2", s.b2},
        {"v_w1", s.v_w1}, {"v_b1", s.v_b1}, {"v_w2", s.v_w2}, {"v_b2", s.v_b2},
    };
}

LearnerState learner_from_json(const json& j) {
    try {
        LearnerShape shape;
        shape.inputs = j.at("shape").at("inputs").get<std::size_t>();
        shape.hidden = j.at("shape").at("hidden").get<std::size_t>();
        shape.outputs = j.at("shape").at("outputs").get<std::size_t>();
        LearnerHyper hyper;
        hyper.learning_rate = j.at("hyper").at("learning_rate").get<double>();
        hyper.momentum = j.at("hyper").at("momentum").get<double>();
        LearnerState s(shape, hyper);
        const std::size_t n1 = shape.inputs * shape.hidden;
        const std::size_t n2 = shape.outputs * shape.hidden;
        s.w1 = doubles(j, "w1", n1);
        s.b1 = doubles(j, "b1", shape.hidden);
        s.w2 = doubles(j, "w2", n2);
        s.b2 = doubles(j, "b2", shape.outputs);
        s.v_w1 = doubles(j, "v_w1", n1);
        s.v_b1 = doubles(j, "v_b1", shape.hidden);
        s.v_w2 = doubles(j, "v_w2", n2);
        s.v_b2 = doubles(j, "v_b2", shape.outputs);
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed learner state: ") + e.what());
    }
}

json to_json(const OptimizerConfig& c) {
    return json{
        {"eta", c.eta},
        {"gamma", c.gamma},
        {"delta", c.delta},
        {"n_dirs", c.n_dirs},
        {"n_seq", c.n_seq},
        {"n_steps", c.n_steps},
        {"horizon", c.horizon},
        {"learner_seed_policy", to_string(c.learner_seed_policy)},
        {"common_random_numbers", c.common_random_numbers},
        {"init_scale", c.init_scale},
        {"learning_rate", c.learner.learning_rate},
        {"momentum", c.learner.momentum},
    };
}

OptimizerConfig optimizer_config_from_json(const json& j) {
    try {
        OptimizerConfig c;
        c.eta = j.at("eta").get<double>();
        c.gamma = j.at("gamma").get<double>();
        c.delta = j.at("delta").get<double>();
        c.n_dirs = j.at("n_dirs").get<std::size_t>();
        c.n_seq = j.at("n_seq").get<std::size_t>();
        c.n_steps = j.at("n_steps").get<std::size_t>();
        c.horizon = j.at("horizon").get<std::size_t>();
        c.learner_seed_policy = parse_seed_policy(j.at("learner_seed_policy").get<std::string>());
        c.common_random_numbers = j.at("common_random_numbers").get<bool>();
        c.init_scale = j.at("init_scale").get<double>();
        c.learner.learning_rate = j.at("learning_rate").get<double>();
        c.learner.momentum = j.at("momentum").get<double>();
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed optimizer config: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("malformed optimizer config: ") + e.what());
    }
}

json to_json(const OptimizerRunState& s) {
    json history = json::array();
    for (const auto& r : s.history) history.push_back({r.step, r.mean, r.std_error});
    return json{
        {"stage", static_cast<int>(s.stage)},
        {"config", to_json(s.config)},
        {"master_seed", s.master_seed},
        {"step", s.step},
        {"z", s.z},
        {"gamma_buf", s.gamma_buf},
        {"history", std::move(history)},
        {"best_z", s.best_z},
        {"best_mean", s.best_mean},
    };
}

OptimizerRunState run_state_from_json(const json& j) {
    try {
        OptimizerRunState s;
        const int stage = j.at("stage").get<int>();
        if (stage != 1 && stage != 2) throw DataError("checkpoint stage must be 1 or 2");
        s.stage = static_cast<Stage>(stage);
        s.config = optimizer_config_from_json(j.at("config"));
        s.master_seed = j.at("master_seed").get<std::uint64_t>();
        s.step = j.at("step").get<std::size_t>();
        s.z = j.at("z").get<std::vector<double>>();
        s.gamma_buf = doubles(j, "gamma_buf", s.z.size());
        for (const auto& r : j.at("history")) {
            s.history.push_back(CostRecord{r.at(0).get<std::size_t>(), r.at(1).get<double>(), r.at(2).get<double>()});
        }
        s.best_z = j.at("best_z").get<std::vector<double>>();
        if (!s.best_z.empty() && s.best_z.size() != s.z.size()) throw DataError("checkpoint best_z has the wrong size");
        s.best_mean = j.at("best_mean").get<double>();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed optimizer state: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const LearnerState& state) {
    save(path, "learner", to_json(state), json::object());
}

void save_checkpoint(const std::filesystem::path& path, const OptimizerRunState& state, const json& context) {
    save(path, "optimizer", to_json(state), context);
}

LearnerState load_learner_checkpoint(const std::filesystem::path& path) {
    return learner_from_json(load(path, "learner").first);
}

LoadedRun load_run_checkpoint(const std::filesystem::path& path) {
    auto [payload, context] = load(path, "optimizer");
    return LoadedRun{run_state_from_json(payload), std::move(context)};
}

}  // namespace seqteach
