#include "koopcbf/koopman/bilinear.hpp"

#include "koopcbf/errors.hpp"

namespace koopcbf::koopman {

namespace {

constexpr long long kModelFormatVersion = 1;

void check_shapes(const RealMatrix& A, const std::vector<RealMatrix>& B, double dt) {
  if (A.rows() == 0 || A.rows() != A.cols()) throw ShapeError("bilinear model: K must be square");
  for (const auto& M : B) {
    if (M.rows() != A.rows() || M.cols() != A.cols()) {
      throw ShapeError("bilinear model: input matrices must match K");
    }
  }
  if (!(dt > 0.0)) throw ConfigError("bilinear model: dt must be positive");
  if (!all_finite(A)) throw NumericError("bilinear model: non-finite entries");
  for (const auto& M : B) {
    if (!all_finite(M)) throw NumericError("bilinear model: non-finite entries");
  }
}

}  // namespace

BilinearModel::BilinearModel(RealMatrix Kd, std::vector<RealMatrix> D, RealMatrix K,
                             std::vector<RealMatrix> C, double dt)
    : Kd_(std::move(Kd)), D_(std::move(D)), K_(std::move(K)), C_(std::move(C)), dt_(dt) {}

BilinearModel BilinearModel::from_discrete(RealMatrix Kd, std::vector<RealMatrix> D, double dt) {
  check_shapes(Kd, D, dt);
  RealMatrix K = (Kd - RealMatrix::Identity(Kd.rows(), Kd.cols())) / dt;
  std::vector<RealMatrix> C;
  C.reserve(D.size());
  for (const auto& Di : D) C.push_back(Di / dt);
  return BilinearModel(std::move(Kd), std::move(D), std::move(K), std::move(C), dt);
}

BilinearModel BilinearModel::from_continuous(RealMatrix K, std::vector<RealMatrix> C, double dt) {
  check_shapes(K, C, dt);
  RealMatrix Kd = K * dt + RealMatrix::Identity(K.rows(), K.cols());
  std::vector<RealMatrix> D;
  D.reserve(C.size());
  for (const auto& Ci : C) D.push_back(Ci * dt);
  return BilinearModel(std::move(Kd), std::move(D), std::move(K), std::move(C), dt);
}

RealMatrix BilinearModel::generator(const RealVector& u) const {
  if (u.size() != input_dim()) throw ShapeError("bilinear model: input dimension mismatch");
  RealMatrix A = K_;
  for (int i = 0; i < input_dim(); ++i) A += u[i] * C_[i];
  return A;
}

bool operator==(const BilinearModel& a, const BilinearModel& b) {
  return a.dt_ == b.dt_ && a.Kd_ == b.Kd_ && a.D_ == b.D_ && a.K_ == b.K_ && a.C_ == b.C_;
}

namespace {

void check_point(const BilinearModel& model, const RealVector& z, const RealVector& u) {
  if (model.empty()) throw StateError("bilinear model is empty");
  if (z.size() != model.lifted_dim() || u.size() != model.input_dim()) {
    throw ShapeError("bilinear model: z/u dimension mismatch");
  }
}

}  // namespace

RealVector psi_continuous(const BilinearModel& model, const RealVector& z, const RealVector& u) {
  check_point(model, z, u);
  RealVector dz = model.K() * z;
  for (int i = 0; i < model.input_dim(); ++i) dz.noalias() += u[i] * (model.C(i) * z);
  return dz;
}

RealVector bilinear_step(const BilinearModel& model, const RealVector& z, const RealVector& u) {
  check_point(model, z, u);
  RealVector next = model.Kd() * z;
  for (int i = 0; i < model.input_dim(); ++i) next.noalias() += u[i] * (model.D(i) * z);
  return next;
}

void write_model(io::TextWriter& w, const BilinearModel& model) {
  if (model.empty()) throw StateError("cannot serialize an empty bilinear model");
  w.integer("koopcbf-model", kModelFormatVersion);
  w.integer("lifted_dim", model.lifted_dim());
  w.integer("input_dim", model.input_dim());
  w.real("dt", model.dt());
  w.matrix("Kd", model.Kd());
  for (int i = 0; i < model.input_dim(); ++i) w.matrix("D", model.D(i));
  w.line("end-model");
}

BilinearModel read_model(io::TextReader& r) {
  const std::size_t header_line = r.line_number();
  const long long version = r.integer("koopcbf-model");
  if (version != kModelFormatVersion) {
    throw ParseError("line " + std::to_string(header_line) + ": unsupported model format version " +
                     std::to_string(version));
  }
  const long long n = r.integer("lifted_dim");
  const long long m = r.integer("input_dim");
  const double dt = r.real("dt");
  if (n <= 0 || m < 0) throw ParseError("model dimensions out of range");
  RealMatrix Kd = r.matrix("Kd");
  std::vector<RealMatrix> D;
  for (long long i = 0; i < m; ++i) D.push_back(r.matrix("D"));
  r.expect("end-model", 0);
  if (Kd.rows() != n) throw ParseError("model Kd does not match lifted_dim");
  try {
    return BilinearModel::from_discrete(std::move(Kd), std::move(D), dt);
  } catch (const Error& e) {
    throw ParseError(std::string("invalid model in checkpoint: ") + e.what());
  }
}

}  // namespace koopcbf::koopman
