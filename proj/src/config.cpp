#include "mrmn/config.hpp"

#include <charconv>
#include <fstream>

#include "mrmn/error.hpp"

namespace mrmn {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "data") {
        cfg.data_path = value;
    } else if (key == "checkpoint") {
        cfg.checkpoint_path = value;
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "model") {
        cfg.model = model_kind_from_string(value);
    } else if (key == "d") {
        cfg.hp.d = parse_u64(key, value);
    } else if (key == "slots") {
        cfg.hp.slots = parse_u64(key, value);
    } else if (key == "lr") {
        cfg.hp.learning_rate = parse_double(key, value);
    } else if (key == "epochs") {
        cfg.hp.epochs = parse_u64(key, value);
    } else if (key == "seed") {
        cfg.hp.seed = parse_u64(key, value);
    } else if (key == "negatives") {
        cfg.hp.negatives_per_eval = parse_u64(key, value);
    } else if (key == "k") {
        cfg.hp.k = parse_u64(key, value);
        if (cfg.hp.k < 1) throw ConfigError("k must be at least 1");
    } else if (key == "l2-reg") {
        cfg.hp.l2_reg = parse_double(key, value);
    } else if (key == "margin") {
        // "0.1" sets the default for all types; "click:0.05" one type
        auto colon = value.find(':');
        if (colon == std::string::npos) {
            cfg.default_margin = parse_double(key, value);
        } else {
            std::string type = trim(value.substr(0, colon));
            if (type.empty()) throw ConfigError("margin: empty type name in '" + value + "'");
            cfg.hp.margins[type] = parse_double(key, trim(value.substr(colon + 1)));
        }
    } else if (key.rfind("margin.", 0) == 0) {
        std::string type = key.substr(7);
        if (type.empty()) throw ConfigError("margin.<type>: empty type name");
        cfg.hp.margins[type] = parse_double(key, value);
    } else if (key == "neg-relation") {
        if (value == "reuse") {
            cfg.hp.neg_relation = NegRelationMode::reuse;
        } else if (value == "recompute") {
            cfg.hp.neg_relation = NegRelationMode::recompute;
        } else {
            throw ConfigError("neg-relation: expected 'reuse' or 'recompute', got '" + value + "'");
        }
    } else if (key == "min-user") {
        cfg.min_user = parse_u64(key, value);
    } else if (key == "min-item") {
        cfg.min_item = parse_u64(key, value);
    } else if (key == "delimiter") {
        if (value.size() != 1) throw ConfigError("delimiter must be a single character");
        cfg.delimiter = value[0];
    } else if (key == "eval-type") {
        cfg.eval_type = value;
    } else if (key == "split") {
        if (value != "valid" && value != "test")
            throw ConfigError("split: expected 'valid' or 'test', got '" + value + "'");
        cfg.split = value;
    } else if (key == "collapse-types") {
        cfg.collapse_types = parse_bool(key, value);
    } else if (key == "eval-every") {
        cfg.eval_every = parse_u64(key, value);
    } else if (key == "grid") {
        cfg.grid = value;
    } else if (key == "attention-samples") {
        cfg.attention_samples = parse_u64(key, value);
        if (cfg.attention_samples < 1) throw ConfigError("attention-samples must be at least 1");
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        try {
            apply_setting(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

void resolve_margins(RunConfig& cfg, const std::vector<std::string>& type_names) {
    for (const auto& name : type_names) {
        if (cfg.hp.margins.count(name)) continue;
        if (cfg.default_margin >= 0.0) {
            cfg.hp.margins[name] = cfg.default_margin;
        } else {
            throw ConfigError("no margin configured for feedback type '" + name +
                              "' (set margin.<type> or a default margin)");
        }
    }
}

std::vector<std::vector<double>> parse_margin_grid(const std::string& grid, std::size_t n_types) {
    std::vector<std::vector<double>> rows;
    std::size_t start = 0;
    while (start <= grid.size()) {
        std::size_t end = grid.find(';', start);
        std::string row_text =
            end == std::string::npos ? grid.substr(start) : grid.substr(start, end - start);
        row_text = trim(row_text);
        if (!row_text.empty()) {
            std::vector<double> row;
            std::size_t field_start = 0;
            while (field_start <= row_text.size()) {
                std::size_t comma = row_text.find(',', field_start);
                std::string field = comma == std::string::npos
                                        ? row_text.substr(field_start)
                                        : row_text.substr(field_start, comma - field_start);
                row.push_back(parse_double("grid", trim(field)));
                if (comma == std::string::npos) break;
                field_start = comma + 1;
            }
            if (row.size() != n_types)
                throw ConfigError("grid row '" + row_text + "' has " + std::to_string(row.size()) +
                                  " margins but the dataset has " + std::to_string(n_types) +
                                  " feedback types");
            rows.push_back(std::move(row));
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (rows.size() < 2) throw ConfigError("margin grid needs at least 2 settings");
    return rows;
}

}  // namespace mrmn
