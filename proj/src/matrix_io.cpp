#include "sqdm/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sqdm {

void write_matrix(const std::string& path, const Grid& grid) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    char buf[32];
    for (int iy = 0; iy < grid.height; ++iy) {
        for (int ix = 0; ix < grid.width; ++ix) {
            std::snprintf(buf, sizeof buf, "%.12g", grid.at(ix, iy));
            f << buf << (ix + 1 < grid.width ? "," : "");
        }
        f << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

Grid read_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged matrix in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty matrix in " + path);
    Grid g(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
    for (int iy = 0; iy < g.height; ++iy)
        for (int ix = 0; ix < g.width; ++ix) g.at(ix, iy) = rows[iy][ix];
    return g;
}

void write_pgm(const std::string& path, const Grid& grid) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "P5\n" << grid.width << " " << grid.height << "\n255\n";
    double lo = grid.min_value();
    double span = grid.span();
    for (int iy = 0; iy < grid.height; ++iy) {
        for (int ix = 0; ix < grid.width; ++ix) {
            double u = span > 0.0 ? (grid.at(ix, iy) - lo) / span : 0.5;
            int v = static_cast<int>(std::lround(u * 255.0));
            f.put(static_cast<char>(v < 0 ? 0 : v > 255 ? 255 : v));
        }
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

void save_dipmaps(const std::string& dir, const DipMaps& maps) {
    write_matrix(dir + "/map_neg.txt", maps.v_neg);
    write_matrix(dir + "/map_pos.txt", maps.v_pos);
    KeyValueFile meta;
    meta.set("width", static_cast<long long>(maps.width()));
    meta.set("height", static_cast<long long>(maps.height()));
    meta.set("extent_x", maps.extent_x);
    meta.set("extent_y", maps.extent_y);
    meta.save(dir + "/maps_meta.txt");
}

DipMaps load_dipmaps(const std::string& dir) {
    DipMaps maps;
    maps.v_neg = read_matrix(dir + "/map_neg.txt");
    maps.v_pos = read_matrix(dir + "/map_pos.txt");
    KeyValueFile meta = KeyValueFile::load(dir + "/maps_meta.txt");
    maps.extent_x = meta.get_double("extent_x", 0.0);
    maps.extent_y = meta.get_double("extent_y", 0.0);
    long long w = meta.get_int("width", maps.v_neg.width);
    long long h = meta.get_int("height", maps.v_neg.height);
    if (w != maps.v_neg.width || h != maps.v_neg.height)
        throw std::runtime_error("dip map header disagrees with matrix shape in " + dir);
    maps.validate();
    return maps;
}

namespace {
std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}
} // namespace

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    KeyValueFile kv;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv.set(key, val);
    }
    return kv;
}

void KeyValueFile::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& [k, v] : entries_) f << k << " = " << v << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
    } else {
        index_[key] = entries_.size();
        entries_.emplace_back(key, value);
    }
}

void KeyValueFile::set(const std::string& key, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    set(key, std::string(buf));
}

void KeyValueFile::set(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

bool KeyValueFile::has(const std::string& key) const { return index_.count(key) > 0; }

const std::string& KeyValueFile::get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw std::out_of_range("missing config key: " + key);
    return entries_[it->second].second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
    auto it = index_.find(key);
    return it == index_.end() ? fallback : entries_[it->second].second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    auto it = index_.find(key);
    return it == index_.end() ? fallback : std::stod(entries_[it->second].second);
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
    auto it = index_.find(key);
    return it == index_.end() ? fallback : std::stoll(entries_[it->second].second);
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
    std::vector<double> out;
    auto it = index_.find(key);
    if (it == index_.end()) return out;
    std::stringstream ss(entries_[it->second].second);
    double v;
    while (ss >> v) out.push_back(v);
    return out;
}

} // namespace sqdm
