#include "mkflow/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mkflow {

namespace {
void require_little_endian() {
    if constexpr (std::endian::native != std::endian::little)
        throw StateError("snapshot payload is defined little-endian; host is not");
}
} // namespace

void emit_snapshot(const DualState& s, const std::string& path) {
    require_little_endian();
    const PolarGrid& g = *s.u_star.grid;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("emit_snapshot: cannot open " + path);
    char header[256];
    const int len = std::snprintf(header, sizeof header,
                                  "MKFLOW 1\ngrid r=%.17g n_rho=%d n_theta=%d\nt=%.17g\n"
                                  "payload f64le row-major rho-major\n",
                                  g.r, g.n_rho, g.n_theta, s.t);
    out.write(header, len);
    out.write(reinterpret_cast<const char*>(s.u_star.v.data()),
              static_cast<std::streamsize>(s.u_star.v.size() * sizeof(double)));
    if (!out) throw FormatError("emit_snapshot: write failed for " + path);
}

DualState load_snapshot(const std::string& path) {
    require_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_snapshot: cannot open " + path);

    long offset = 0;
    auto read_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line))
            throw FormatError(std::string("load_snapshot: truncated header, expected ") + what,
                              offset);
        offset += static_cast<long>(line.size()) + 1;
        return line;
    };

    const std::string magic = read_line("magic");
    if (magic.rfind("MKFLOW ", 0) != 0)
        throw FormatError("load_snapshot: bad magic line", 0);
    if (magic != "MKFLOW 1")
        throw FormatError("load_snapshot: unsupported version '" + magic + "'", 0);

    const std::string gridline = read_line("grid line");
    double r = 0.0;
    int n_rho = 0, n_theta = 0;
    if (std::sscanf(gridline.c_str(), "grid r=%lg n_rho=%d n_theta=%d", &r, &n_rho, &n_theta) != 3)
        throw FormatError("load_snapshot: malformed grid line", offset);

    const std::string tline = read_line("time line");
    double t = 0.0;
    if (std::sscanf(tline.c_str(), "t=%lg", &t) != 1)
        throw FormatError("load_snapshot: malformed time line", offset);

    const std::string payload = read_line("payload line");
    if (payload != "payload f64le row-major rho-major")
        throw FormatError("load_snapshot: unknown payload declaration", offset);

    DualState s;
    s.t = t;
    s.u_star = ScalarField(build_grid(r, n_rho, n_theta));
    const std::streamsize want =
        static_cast<std::streamsize>(s.u_star.v.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(s.u_star.v.data()), want);
    if (in.gcount() != want)
        throw FormatError("load_snapshot: truncated payload", offset + in.gcount());
    return s;
}

std::string ConfigMap::get(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

std::string ConfigMap::require(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("config: missing required field '" + key + "'");
    return it->second;
}

double ConfigMap::get_num(const std::string& key, double fallback) const {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        while (pos < it->second.size() && std::isspace(static_cast<unsigned char>(it->second[pos])))
            ++pos;
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw FormatError("config: field '" + key + "' is not a number: " + it->second);
    }
}

long ConfigMap::get_int(const std::string& key, long fallback) const {
    const double v = get_num(key, static_cast<double>(fallback));
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v)
        throw FormatError("config: field '" + key + "' must be an integer");
    return l;
}

std::vector<double> ConfigMap::get_list(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) return {};
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw FormatError("config: field '" + key + "' has a non-numeric entry: " + item);
        }
    }
    return out;
}

namespace {
std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
} // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got: " + line, lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw FormatError("config line " + std::to_string(lineno) + ": empty key", lineno);
        cfg.kv[key] = val;
    }
    return cfg;
}

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

GraphPatch load_graph_patch(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("load_graph_patch: cannot open " + path);
    std::size_t n1 = 0, n2 = 0;
    if (!(in >> n1 >> n2) || n1 < 2 || n2 < 2)
        throw FormatError("load_graph_patch: bad dimensions line");
    GraphPatch p;
    p.x1.resize(n1);
    p.x2.resize(n2);
    p.u.resize(n1 * n2);
    for (auto& v : p.x1)
        if (!(in >> v)) throw FormatError("load_graph_patch: truncated x1 row");
    for (auto& v : p.x2)
        if (!(in >> v)) throw FormatError("load_graph_patch: truncated x2 row");
    for (auto& v : p.u)
        if (!(in >> v)) throw FormatError("load_graph_patch: truncated sample block");
    return p;
}

} // namespace mkflow
