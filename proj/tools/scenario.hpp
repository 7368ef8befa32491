#pragma once

// Scenario runner: binds flat key = value config files to the library and
// produces deterministic artifacts per run (a manifest echoing resolved
// parameters, columnar traces, and a JSON summary of headline metrics).
// Nothing is written until a run has fully completed, so a failed scenario
// leaves no partial outputs behind.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qmemcli {

// Structural problem with a scenario file (unreadable, bad line, duplicate
// key). Semantic problems reuse qmem::ConfigError; blow-ups during compute
// surface as qmem::NumericError. The CLI maps the three to exit codes 2/3/4.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name;  // file stem; names the artifact subdirectory
    std::string kind;
    std::uint64_t seed = 0;
    std::string output_root;  // optional output_dir key from the file
    std::map<std::string, std::string> raw;  // remaining keys, unresolved text
};

Scenario parse_scenario_file(const std::string& path);

// Kind-specific key binding and range checks without running anything.
void validate_scenario(const Scenario& sc);

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

Artifacts run_scenario(const Scenario& sc);

void write_artifacts(const std::string& dir, const Artifacts& a);

struct CatalogEntry {
    const char* file;  // bundled scenario file name
    const char* kind;
    const char* what;  // one line naming the reproduced figure or map
};

// Bundled scenario catalog in stable (alphabetical) order.
const std::vector<CatalogEntry>& catalog();

}  // namespace qmemcli
