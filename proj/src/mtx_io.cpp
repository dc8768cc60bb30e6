#include <vmor/mtx_io.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace vmor {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool next_data_line(std::istream &in, std::string &line) {
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '%')
            continue;
        return true;
    }
    return false;
}

} // namespace

Mat read_mtx(std::istream &in) {
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error("read_mtx: empty input");
    std::istringstream hs(header);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || lower(object) != "matrix")
        throw std::runtime_error("read_mtx: missing %%MatrixMarket matrix banner");
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (field != "real" && field != "integer" && field != "double")
        throw std::runtime_error("read_mtx: only real matrices are supported");
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw std::runtime_error("read_mtx: unsupported symmetry '" + symmetry + "'");

    std::string line;
    if (!next_data_line(in, line))
        throw std::runtime_error("read_mtx: missing size line");
    std::istringstream ss(line);
    Index rows = 0, cols = 0, nnz = 0;
    if (format == "array") {
        if (!(ss >> rows >> cols))
            throw std::runtime_error("read_mtx: bad size line");
        Mat A = Mat::Zero(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = symmetric ? j : 0; i < rows; ++i) {
                if (!next_data_line(in, line))
                    throw std::runtime_error("read_mtx: truncated array data");
                double v = std::stod(line);
                A(i, j) = v;
                if (symmetric)
                    A(j, i) = v;
            }
        return A;
    }
    if (format != "coordinate")
        throw std::runtime_error("read_mtx: unsupported format '" + format + "'");
    if (!(ss >> rows >> cols >> nnz))
        throw std::runtime_error("read_mtx: bad size line");
    Mat A = Mat::Zero(rows, cols);
    for (Index k = 0; k < nnz; ++k) {
        if (!next_data_line(in, line))
            throw std::runtime_error("read_mtx: truncated coordinate data");
        std::istringstream es(line);
        Index i = 0, j = 0;
        double v = 0;
        if (!(es >> i >> j >> v) || i < 1 || j < 1 || i > rows || j > cols)
            throw std::runtime_error("read_mtx: bad coordinate entry");
        A(i - 1, j - 1) += v;
        if (symmetric && i != j)
            A(j - 1, i - 1) += v;
    }
    return A;
}

Mat read_mtx(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_mtx: cannot open " + path);
    return read_mtx(in);
}

void write_mtx(std::ostream &out, const Mat &A, MtxFormat format) {
    out << std::setprecision(17);
    if (format == MtxFormat::array) {
        out << "%%MatrixMarket matrix array real general\n" << A.rows() << ' ' << A.cols() << '\n';
        for (Index j = 0; j < A.cols(); ++j)
            for (Index i = 0; i < A.rows(); ++i)
                out << A(i, j) << '\n';
        return;
    }
    Index nnz = 0;
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i)
            nnz += A(i, j) != 0;
    out << "%%MatrixMarket matrix coordinate real general\n"
        << A.rows() << ' ' << A.cols() << ' ' << nnz << '\n';
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i)
            if (A(i, j) != 0)
                out << i + 1 << ' ' << j + 1 << ' ' << A(i, j) << '\n';
}

void write_mtx(const std::string &path, const Mat &A, MtxFormat format) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_mtx: cannot open " + path);
    write_mtx(out, A, format);
}

} // namespace vmor
