#pragma once

// Run configuration: flat key=value config files plus programmatic overrides.
// Flags always win over file values; the CLI applies them on top.

#include <map>
#include <string>
#include <vector>

#include "mrmn/baselines.hpp"
#include "mrmn/parameters.hpp"

namespace mrmn {

struct RunConfig {
    std::string data_path;
    std::string checkpoint_path;
    std::string out_dir = ".";
    ModelKind model = ModelKind::mrmn;
    HyperParams hp;
    // margin value applied to any type without an explicit margins entry;
    // negative = unset
    double default_margin = -1.0;
    std::size_t min_user = 0;
    std::size_t min_item = 0;
    char delimiter = ',';
    std::string eval_type;  // empty = primary (first type)
    std::string split = "test";
    bool collapse_types = false;
    std::size_t eval_every = 0;  // 0 = no periodic validation during training
    std::string grid;            // margin-grid rows "a,b,c;d,e,f" in type order
    std::size_t attention_samples = 10000;
};

// Applies one `key=value` setting; throws ConfigError on unknown keys or bad
// values. The same table backs config files and CLI flags.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value file, `#` comments and blank lines ignored.
RunConfig load_config_file(const std::string& path);

// Fills hp.margins with one entry per dataset type, from explicit entries
// plus the default margin; throws ConfigError when a type is left uncovered.
void resolve_margins(RunConfig& cfg, const std::vector<std::string>& type_names);

// Parses "0.2,0.15;0.1,0.1" into rows of margin values aligned with the
// dataset's type order.
std::vector<std::vector<double>> parse_margin_grid(const std::string& grid, std::size_t n_types);

}  // namespace mrmn
