#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace epsim {

enum class Task { Xor, Blobs, Parity3 };

Task task_from_name(const std::string& s);
std::string task_name(Task t);

struct Example {
  Eigen::VectorXd u;
  Eigen::VectorXd d;
};

// xor: the 4 fixed pairs over {-1,+1}^2, d = +1 iff the inputs differ.
// blobs: n points from two fixed-center Gaussian clusters in the plane.
// parity3: the 8 fixed pairs over {-1,+1}^3, d = product of the inputs.
std::vector<Example> make_dataset(Task task, int n, std::uint64_t seed);

// CSV with header u_1..u_k,d_1..d_m.
std::string dataset_to_csv(const std::vector<Example>& data);
std::vector<Example> dataset_from_csv(const std::string& csv);
void dataset_save_csv(const std::vector<Example>& data, const std::string& path);
std::vector<Example> dataset_load_csv(const std::string& path);

}  // namespace epsim
