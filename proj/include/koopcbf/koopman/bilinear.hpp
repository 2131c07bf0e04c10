#pragma once

#include <vector>

#include "koopcbf/io/text_format.hpp"
#include "koopcbf/linalg.hpp"

namespace koopcbf::koopman {

// Lifted bilinear dynamics
//   continuous: z_dot  = K z + sum_i u_i C_i z
//   discrete:   z_next = K_d z + sum_i u_i D_i z,  K_d = K dt + I,  D_i = C_i dt.
class BilinearModel {
 public:
  BilinearModel() = default;

  static BilinearModel from_discrete(RealMatrix Kd, std::vector<RealMatrix> D, double dt);
  static BilinearModel from_continuous(RealMatrix K, std::vector<RealMatrix> C, double dt);

  int lifted_dim() const { return static_cast<int>(Kd_.rows()); }
  int input_dim() const { return static_cast<int>(D_.size()); }
  double dt() const { return dt_; }
  bool empty() const { return Kd_.size() == 0; }

  const RealMatrix& Kd() const { return Kd_; }
  const RealMatrix& D(int i) const { return D_[i]; }
  const std::vector<RealMatrix>& D() const { return D_; }
  const RealMatrix& K() const { return K_; }
  const RealMatrix& C(int i) const { return C_[i]; }
  const std::vector<RealMatrix>& C() const { return C_; }

  // K + sum_i u_i C_i
  RealMatrix generator(const RealVector& u) const;

  friend bool operator==(const BilinearModel& a, const BilinearModel& b);

 private:
  BilinearModel(RealMatrix Kd, std::vector<RealMatrix> D, RealMatrix K, std::vector<RealMatrix> C,
                double dt);

  RealMatrix Kd_;
  std::vector<RealMatrix> D_;
  RealMatrix K_;
  std::vector<RealMatrix> C_;
  double dt_ = 0.0;
};

RealVector psi_continuous(const BilinearModel& model, const RealVector& z, const RealVector& u);
RealVector bilinear_step(const BilinearModel& model, const RealVector& z, const RealVector& u);

// Versioned checkpoint section ("koopcbf-model 1").
void write_model(io::TextWriter& w, const BilinearModel& model);
BilinearModel read_model(io::TextReader& r);

}  // namespace koopcbf::koopman
