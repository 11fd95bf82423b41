#include "kgs/matrix_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "kgs/errors.hpp"

namespace kgs {

void export_matrix(const CMat& m, const std::string& path_base, double dx,
                   double X, const std::string& tags) {
  nlohmann::json header;
  header["rows"] = m.rows();
  header["cols"] = m.cols();
  header["dx"] = dx;
  header["X"] = X;
  header["tags"] = tags;
  header["layout"] = "row-major little-endian complex128";
  atomic_write_text(path_base + ".json", header.dump(2) + "\n");

  const std::string tmp = path_base + ".bin.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorCode::Internal, "cannot open " + tmp);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double re = m(i, j).real(), im = m(i, j).imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof(double));
        out.write(reinterpret_cast<const char*>(&im), sizeof(double));
      }
  }
  std::filesystem::rename(tmp, path_base + ".bin");
}

CMat import_matrix(const std::string& path_base) {
  std::ifstream hdr(path_base + ".json");
  if (!hdr) fail(ErrorCode::Internal, "cannot open " + path_base + ".json");
  nlohmann::json header = nlohmann::json::parse(hdr);
  const Eigen::Index rows = header.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = header.at("cols").get<Eigen::Index>();
  CMat m(rows, cols);
  std::ifstream in(path_base + ".bin", std::ios::binary);
  if (!in) fail(ErrorCode::Internal, "cannot open " + path_base + ".bin");
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re = 0, im = 0;
      in.read(reinterpret_cast<char*>(&re), sizeof(double));
      in.read(reinterpret_cast<char*>(&im), sizeof(double));
      m(i, j) = Complex(re, im);
    }
  return m;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorCode::Internal, "cannot open " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace kgs
