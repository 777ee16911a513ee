#pragma once

#include <array>
#include <string>
#include <vector>

namespace fodkit {

// Diffusion gradient table: per-volume direction + b-value, with rows
// grouped into shells by clustered b-value.
struct GradientTable {
  struct Row {
    std::array<double, 3> dir{0, 0, 0};  // unit vector, or zero for b=0
    double bval = 0;
  };
  struct Shell {
    double bvalue = 0;            // mean b-value of member rows; 0 for the b0 shell
    std::vector<int> rows;        // indices into `rows`, ascending
  };

  std::vector<Row> rows;
  std::vector<Shell> shells;      // sorted by bvalue; b0 shell first if present

  // Re-derives shells: b < b0_threshold is the b0 shell, others cluster by
  // rounding b to the nearest multiple of shell_tolerance.
  void cluster_shells(double b0_threshold = 50.0, double shell_tolerance = 100.0);

  // Shell whose mean b-value is nearest to b within shell_tolerance, or -1.
  int find_shell(double b, double shell_tolerance = 100.0) const;
};

GradientTable read_gradients_fsl(const std::string& bvecs_path, const std::string& bvals_path);
GradientTable read_gradients_mrtrix(const std::string& path);
void write_gradients_fsl(const GradientTable& t, const std::string& bvecs_path,
                         const std::string& bvals_path);
void write_gradients_mrtrix(const GradientTable& t, const std::string& path);

} // namespace fodkit
