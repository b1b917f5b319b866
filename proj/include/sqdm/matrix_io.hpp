#ifndef SQDM_MATRIX_IO_HPP
#define SQDM_MATRIX_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "sqdm/grid.hpp"
#include "sqdm/plant.hpp"

namespace sqdm {

/// Comma-separated matrix text, row-major, one row per y line.
void write_matrix(const std::string& path, const Grid& grid);
Grid read_matrix(const std::string& path);

/// 8-bit binary PGM, min-max normalized. Flat images render mid-gray.
void write_pgm(const std::string& path, const Grid& grid);

/// Dip maps as two matrix files plus a `name = value` header with
/// width/height/extent keys. `prefix` is a directory; fixed file names
/// map_neg.txt / map_pos.txt / maps_meta.txt inside it.
void save_dipmaps(const std::string& dir, const DipMaps& maps);
DipMaps load_dipmaps(const std::string& dir);

/// Ordered `key = value` text file ('#' starts a comment).
class KeyValueFile {
  public:
    KeyValueFile() = default;
    static KeyValueFile load(const std::string& path);
    void save(const std::string& path) const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;  // throws if absent
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // whitespace-split

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

} // namespace sqdm

#endif
