#pragma once

#include <string>

#include "kgs/types.hpp"

namespace kgs {

/// Dense binary export: row-major, little-endian, 16-byte complex entries,
/// written next to a JSON header {rows, cols, dx, X, tags}.
void export_matrix(const CMat& m, const std::string& path_base, double dx,
                   double X, const std::string& tags);

CMat import_matrix(const std::string& path_base);

/// temp-then-rename text write
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace kgs
