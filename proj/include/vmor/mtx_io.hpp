#pragma once

#include <vmor/linops.hpp>

#include <iosfwd>
#include <string>

namespace vmor {

enum class MtxFormat { array, coordinate };

/// Reads a real MatrixMarket matrix ("array" or "coordinate"; "general" or
/// "symmetric"). Throws std::runtime_error on malformed input.
Mat read_mtx(std::istream &in);
Mat read_mtx(const std::string &path);

/// Writes `A` as a real general MatrixMarket matrix. The coordinate format
/// lists only the nonzero entries.
void write_mtx(std::ostream &out, const Mat &A, MtxFormat format = MtxFormat::array);
void write_mtx(const std::string &path, const Mat &A, MtxFormat format = MtxFormat::array);

} // namespace vmor
