#include "tcs/linear.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "tcs/binary.hpp"

namespace tcs {

namespace {
constexpr std::string_view kLinearMagic = "SCSL";
constexpr std::uint16_t kLinearVersion = 1;
}  // namespace

MomentAccumulator::MomentAccumulator(std::size_t block_size, std::size_t measurement_size)
    : cross_(Eigen::MatrixXd::Zero(Eigen::Index(block_size), Eigen::Index(measurement_size))),
      gram_(Eigen::MatrixXd::Zero(Eigen::Index(measurement_size), Eigen::Index(measurement_size))) {}

void MomentAccumulator::accumulate(const Eigen::Ref<const Eigen::MatrixXd>& blocks,
                                   const Eigen::Ref<const Eigen::MatrixXd>& measurements) {
  if (blocks.rows() != cross_.rows() || measurements.rows() != gram_.rows() ||
      blocks.cols() != measurements.cols())
    throw GeometryError("batch dimensions do not match the accumulator");
  if (blocks.cols() == 0) return;
  cross_.noalias() += blocks * measurements.transpose();
  gram_.noalias() += measurements * measurements.transpose();
  count_ += std::uint64_t(blocks.cols());
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.cross_.rows() != cross_.rows() || other.gram_.rows() != gram_.rows())
    throw GeometryError("cannot merge accumulators of different shape");
  cross_ += other.cross_;
  gram_ += other.gram_;
  count_ += other.count_;
}

LinearModel::LinearModel(Eigen::MatrixXd weights, std::uint64_t mask_hash, std::uint64_t samples,
                         double ridge)
    : weights_(std::move(weights)), mask_hash_(mask_hash), samples_(samples), ridge_(ridge) {}

Eigen::VectorXd LinearModel::decode_unclamped(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != weights_.cols()) throw GeometryError("measurement length does not match W_p");
  return weights_ * y;
}

Eigen::VectorXd LinearModel::decode_patch(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return decode_unclamped(y).cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::MatrixXd LinearModel::decode_batch(const Eigen::Ref<const Eigen::MatrixXd>& measurements) const {
  if (measurements.rows() != weights_.cols())
    throw GeometryError("measurement length does not match W_p");
  Eigen::MatrixXd out = weights_ * measurements;
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

LinearModel solve(const MomentAccumulator& moments, std::uint64_t mask_hash,
                  const SolveOptions& options) {
  if (options.ridge < 0.0) throw InvalidArgument("ridge must be non-negative");
  const Eigen::Index m = moments.gram().rows();
  Eigen::MatrixXd system = moments.gram();
  system.diagonal().array() += options.ridge;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double largest = m > 0 ? values[m - 1] : 0.0;
  const double threshold = options.singular_tolerance * std::max(largest, 0.0);
  std::size_t deficiency = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(values[i] > threshold)) ++deficiency;

  LinearModel model;
  model.mask_hash_ = mask_hash;
  model.samples_ = moments.count();
  model.ridge_ = options.ridge;

  if (deficiency > 0 || largest <= 0.0) {
    if (!options.pseudo_inverse) {
      std::vector<std::size_t> empty;
      for (Eigen::Index i = 0; i < m; ++i)
        if (moments.gram().row(i).cwiseAbs().maxCoeff() == 0.0) empty.push_back(std::size_t(i));
      std::ostringstream msg;
      msg << "no solution: measurement Gram matrix is singular (rank deficiency " << deficiency
          << " of " << m << ")";
      if (!empty.empty()) {
        msg << "; measurements never sampled:";
        for (auto i : empty) msg << ' ' << i;
      }
      throw SolveError(msg.str(), deficiency, std::move(empty));
    }
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i)
      if (values[i] > threshold) inv[i] = 1.0 / values[i];
    const Eigen::MatrixXd pinv =
        eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    model.weights_ = moments.cross() * pinv;
    model.condition_number_ = std::numeric_limits<double>::infinity();
    model.ill_conditioned_ = true;
    return model;
  }

  model.condition_number_ = largest / values[0];
  model.ill_conditioned_ = model.condition_number_ > options.condition_warning;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success)
    throw SolveError("no solution: Cholesky factorization failed", 1, {});
  // W (B + rI) = A  <=>  (B + rI) W^T = A^T since the system is symmetric.
  model.weights_ = llt.solve(moments.cross().transpose()).transpose();
  return model;
}

void LinearModel::save(std::ostream& out) const {
  BinaryWriter w(out);
  w.put_magic(kLinearMagic);
  w.put<std::uint16_t>(kLinearVersion);
  w.put<std::uint32_t>(std::uint32_t(weights_.rows()));
  w.put<std::uint32_t>(std::uint32_t(weights_.cols()));
  w.put<std::uint64_t>(mask_hash_);
  w.put<std::uint64_t>(samples_);
  w.put<double>(ridge_);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = weights_;
  w.put_array<double>({rows.data(), std::size_t(rows.size())});
  w.check();
}

void LinearModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  save(out);
}

LinearModel LinearModel::load(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic(kLinearMagic);
  if (r.get<std::uint16_t>() != kLinearVersion) throw FormatError("unsupported linear model version");
  const auto n_p = r.get<std::uint32_t>();
  const auto m_p = r.get<std::uint32_t>();
  const auto hash = r.get<std::uint64_t>();
  const auto samples = r.get<std::uint64_t>();
  const auto ridge = r.get<double>();
  if (n_p == 0 || m_p == 0 || std::uint64_t(n_p) * m_p > (1ull << 28))
    throw FormatError("implausible linear model dimensions");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n_p, m_p);
  r.get_array<double>({rows.data(), std::size_t(rows.size())});
  if (!rows.allFinite()) throw FormatError("linear model contains non-finite weights");
  return LinearModel(Eigen::MatrixXd(rows), hash, samples, ridge);
}

LinearModel LinearModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load(in);
}

}  // namespace tcs
