#include "octave/config_io.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "octave/error.hpp"

namespace octave {

using nlohmann::json;

namespace {

json to_json_obj(const TrainConfig& c) {
    return json{{"depth", c.depth},
                {"classes", c.classes},
                {"base_width", c.base_width},
                {"disc_base_width", c.disc_base_width},
                {"alpha1", c.alpha1},
                {"alpha2", c.alpha2},
                {"clamp_c", c.clamp_c},
                {"log_eps", c.log_eps},
                {"ssds", c.ssds},
                {"alpha0_mode", c.alpha0_mode},
                {"invert_class_weights", c.invert_class_weights},
                {"pyramid_mode", c.pyramid_mode},
                {"ild_mean_over_levels", c.ild_mean_over_levels},
                {"ild_stop_gradient", c.ild_stop_gradient},
                {"learning_rate", c.learning_rate},
                {"weight_decay", c.weight_decay},
                {"schedule", c.schedule},
                {"cyclic_low", c.cyclic_low},
                {"cyclic_high", c.cyclic_high},
                {"cyclic_period", c.cyclic_period},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"availability", c.availability},
                {"rotation_degrees", c.rotation_degrees},
                {"unpaired_fraction", c.unpaired_fraction},
                {"test_fraction", c.test_fraction},
                {"folds", c.folds},
                {"fold_index", c.fold_index}};
}

}  // namespace

std::string config_to_json(const TrainConfig& cfg, int indent) {
    return to_json_obj(cfg).dump(indent);
}

TrainConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config must be a JSON object");

    TrainConfig c;
    json known = to_json_obj(c);
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw config_error("unknown config key '" + key + "'");
        (void)value;
    }
    try {
        c.depth = j.value("depth", c.depth);
        c.classes = j.value("classes", c.classes);
        c.base_width = j.value("base_width", c.base_width);
        c.disc_base_width = j.value("disc_base_width", c.disc_base_width);
        c.alpha1 = j.value("alpha1", c.alpha1);
        c.alpha2 = j.value("alpha2", c.alpha2);
        c.clamp_c = j.value("clamp_c", c.clamp_c);
        c.log_eps = j.value("log_eps", c.log_eps);
        c.ssds = j.value("ssds", c.ssds);
        c.alpha0_mode = j.value("alpha0_mode", c.alpha0_mode);
        c.invert_class_weights = j.value("invert_class_weights", c.invert_class_weights);
        c.pyramid_mode = j.value("pyramid_mode", c.pyramid_mode);
        c.ild_mean_over_levels = j.value("ild_mean_over_levels", c.ild_mean_over_levels);
        c.ild_stop_gradient = j.value("ild_stop_gradient", c.ild_stop_gradient);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.schedule = j.value("schedule", c.schedule);
        c.cyclic_low = j.value("cyclic_low", c.cyclic_low);
        c.cyclic_high = j.value("cyclic_high", c.cyclic_high);
        c.cyclic_period = j.value("cyclic_period", c.cyclic_period);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.seed = j.value("seed", c.seed);
        c.availability = j.value("availability", c.availability);
        c.rotation_degrees = j.value("rotation_degrees", c.rotation_degrees);
        c.unpaired_fraction = j.value("unpaired_fraction", c.unpaired_fraction);
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        c.folds = j.value("folds", c.folds);
        c.fold_index = j.value("fold_index", c.fold_index);
    } catch (const json::exception& e) {
        throw config_error(std::string("config field type error: ") + e.what());
    }
    c.validate();
    return c;
}

TrainConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("config-missing", "cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void save_config_file(const std::filesystem::path& path, const TrainConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot write config file " + path.string());
    f << config_to_json(cfg, 2) << "\n";
}

}  // namespace octave
