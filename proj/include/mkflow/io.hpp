#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mkflow/dualgeo.hpp"

namespace mkflow {

// Snapshot file: self-describing text header, raw little-endian f64
// payload. Round-trips bit-exactly. The ghost ring is not stored; load
// returns a state whose ghost must be re-derived from its problem.
//   MKFLOW 1
//   grid r=<r> n_rho=<int> n_theta=<int>
//   t=<decimal>
//   payload f64le row-major rho-major
void emit_snapshot(const DualState& s, const std::string& path);
DualState load_snapshot(const std::string& path);

// Line-oriented "key = value" configuration, '#' comments, UTF-8.
struct ConfigMap {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    double get_num(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    std::vector<double> get_list(const std::string& key) const; // comma separated
};

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& text);

// Graph samples for custom initial data / boost tests:
//   line 1: <n1> <n2>
//   line 2: n1 ascending x1 values
//   line 3: n2 ascending x2 values
//   then n2 lines of n1 u values (x2-major)
GraphPatch load_graph_patch(const std::string& path);

} // namespace mkflow
