#include "core/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "core/errors.hpp"

namespace epsim {

Task task_from_name(const std::string& s) {
  if (s == "xor") return Task::Xor;
  if (s == "blobs") return Task::Blobs;
  if (s == "parity3") return Task::Parity3;
  throw Error(ErrorCode::InvalidArgument, "unknown task: " + s);
}

std::string task_name(Task t) {
  switch (t) {
    case Task::Xor: return "xor";
    case Task::Blobs: return "blobs";
    case Task::Parity3: return "parity3";
  }
  return "?";
}

std::vector<Example> make_dataset(Task task, int n, std::uint64_t seed) {
  require(n > 0, ErrorCode::InvalidArgument, "dataset size must be positive");
  std::vector<Example> data;
  switch (task) {
    case Task::Xor: {
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          Example e;
          e.u = Eigen::Vector2d(a ? 1.0 : -1.0, b ? 1.0 : -1.0);
          e.d = Eigen::VectorXd::Constant(1, a != b ? 1.0 : -1.0);
          data.push_back(e);
        }
      break;
    }
    case Task::Parity3: {
      for (int s = 0; s < 8; ++s) {
        Example e;
        e.u = Eigen::Vector3d(s & 1 ? 1.0 : -1.0, s & 2 ? 1.0 : -1.0, s & 4 ? 1.0 : -1.0);
        e.d = Eigen::VectorXd::Constant(1, e.u.prod());
        data.push_back(e);
      }
      break;
    }
    case Task::Blobs: {
      // Fixed centers (+1,+1) / (-1,-1), sigma 0.5, clusters alternating.
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> gauss(0.0, 0.5);
      for (int k = 0; k < n; ++k) {
        const double label = k % 2 == 0 ? 1.0 : -1.0;
        Example e;
        e.u = Eigen::Vector2d(label + gauss(rng), label + gauss(rng));
        e.d = Eigen::VectorXd::Constant(1, label);
        data.push_back(e);
      }
      break;
    }
  }
  return data;
}

std::string dataset_to_csv(const std::vector<Example>& data) {
  require(!data.empty(), ErrorCode::InvalidArgument, "cannot export an empty dataset");
  const auto k = data[0].u.size();
  const auto m = data[0].d.size();
  std::ostringstream out;
  for (Eigen::Index i = 0; i < k; ++i) out << (i ? "," : "") << "u_" << (i + 1);
  for (Eigen::Index i = 0; i < m; ++i) out << ",d_" << (i + 1);
  out << "\n";
  char buf[64];
  for (const auto& e : data) {
    require_dim(e.u.size() == k && e.d.size() == m, "inconsistent dataset row sizes");
    bool first = true;
    auto emit = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << (first ? "" : ",") << buf;
      first = false;
    };
    for (Eigen::Index i = 0; i < k; ++i) emit(e.u[i]);
    for (Eigen::Index i = 0; i < m; ++i) emit(e.d[i]);
    out << "\n";
  }
  return out.str();
}

std::vector<Example> dataset_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::InvalidArgument,
          "empty CSV document");

  int k = 0, m = 0;
  {
    std::istringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) {
      if (col.rfind("u_", 0) == 0) ++k;
      else if (col.rfind("d_", 0) == 0) ++m;
      else throw Error(ErrorCode::InvalidArgument, "unexpected CSV column: " + col);
    }
  }
  require(k > 0 && m > 0, ErrorCode::InvalidArgument,
          "CSV header must declare u_* and d_* columns");

  std::vector<Example> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Example e;
    e.u.resize(k);
    e.d.resize(m);
    for (int i = 0; i < k + m; ++i) {
      require(static_cast<bool>(std::getline(row, cell, ',')), ErrorCode::InvalidArgument,
              "CSV row has too few columns");
      const double v = std::stod(cell);
      if (i < k) e.u[i] = v;
      else e.d[i - k] = v;
    }
    data.push_back(e);
  }
  require(!data.empty(), ErrorCode::InvalidArgument, "CSV holds no data rows");
  return data;
}

void dataset_save_csv(const std::vector<Example>& data, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot open for writing: " + path);
  f << dataset_to_csv(data);
  require(f.good(), ErrorCode::Io, "write failed: " + path);
}

std::vector<Example> dataset_load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::Io, "cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return dataset_from_csv(ss.str());
}

}  // namespace epsim
