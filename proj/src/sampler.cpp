#include "mnls/sampler.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mnls::sampler {

namespace {

double gaussian_entry(std::uint64_t seed, std::uint64_t row, std::uint32_t col, StreamRole role,
                      std::uint32_t sub = 0) {
  const auto pair = keyed_normal_pair(seed, row, col / 2, role, sub);
  return (col % 2 == 0) ? pair.first : pair.second;
}

double student_entry(int df, std::uint64_t seed, std::uint64_t row, std::uint32_t col,
                     StreamRole role) {
  const double z = keyed_normal_pair(seed, row, col, role, 0).first;
  double chi2 = 0.0;
  for (int s = 0; s < df; s += 2) {
    const auto pair = keyed_normal_pair(seed, row, col, role, 1 + static_cast<std::uint32_t>(s / 2));
    chi2 += pair.first * pair.first;
    if (s + 1 < df) chi2 += pair.second * pair.second;
  }
  const double dfd = static_cast<double>(df);
  return z / std::sqrt(chi2 / dfd) * std::sqrt((dfd - 2.0) / dfd);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 8);
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

EntryLaw EntryLaw::student_t(int df) {
  if (df < 5) throw DomainError("StudentT law requires df >= 5");
  return {LawKind::StudentT, df};
}

EntryLaw EntryLaw::parse(std::string_view name, int df) {
  if (name == "gaussian") return gaussian();
  if (name == "rademacher") return rademacher();
  if (name == "uniform") return uniform();
  if (name == "student_t") return student_t(df);
  throw DomainError("unknown entry law '" + std::string(name) + "'");
}

std::string EntryLaw::name() const {
  switch (kind) {
    case LawKind::Gaussian: return "gaussian";
    case LawKind::Rademacher: return "rademacher";
    case LawKind::UniformScaled: return "uniform";
    case LawKind::StudentT: return "student_t";
  }
  return "unknown";
}

double EntryLaw::sample(std::uint64_t seed, std::uint64_t row, std::uint32_t col,
                        StreamRole role) const {
  switch (kind) {
    case LawKind::Gaussian:
      return gaussian_entry(seed, row, col, role);
    case LawKind::Rademacher:
      return keyed_uniform_pair(seed, row, col, role).first < 0.5 ? -1.0 : 1.0;
    case LawKind::UniformScaled:
      return std::sqrt(3.0) * (2.0 * keyed_uniform_pair(seed, row, col, role).first - 1.0);
    case LawKind::StudentT:
      return student_entry(df, seed, row, col, role);
  }
  return 0.0;
}

void EntryLaw::fill_row(std::uint64_t seed, std::uint64_t row, StreamRole role,
                        std::span<double> out) const {
  const std::size_t d = out.size();
  if (kind == LawKind::Gaussian) {
    std::size_t k = 0;
    for (; k + 1 < d; k += 2) {
      const auto pair = keyed_normal_pair(seed, row, static_cast<std::uint32_t>(k / 2), role);
      out[k] = pair.first;
      out[k + 1] = pair.second;
    }
    if (k < d) out[k] = gaussian_entry(seed, row, static_cast<std::uint32_t>(k), role);
    return;
  }
  for (std::size_t k = 0; k < d; ++k) out[k] = sample(seed, row, static_cast<std::uint32_t>(k), role);
}

DesignMatrix sample_z(std::size_t n, std::size_t d, const EntryLaw& law, std::uint64_t seed) {
  DesignMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    law.fill_row(seed, i, StreamRole::Design, {z.row(static_cast<Eigen::Index>(i)).data(), d});
  }
  return z;
}

DesignMatrix sample_design(const model::CovarianceModel& model, std::size_t n, const EntryLaw& law,
                           std::uint64_t seed) {
  const std::size_t d = model.dimension();
  DesignMatrix x = sample_z(n, d, law, seed);
  const Eigen::ArrayXd root = model.eigenvalues().array().sqrt();
  Vector buffer(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    buffer = x.row(i).transpose().array() * root;
    model.basis().apply_inplace(buffer);
    x.row(i) = buffer.transpose();
  }
  return x;
}

Vector sample_labels(const DesignMatrix& X, const Vector& theta, double sigma, const EntryLaw& law,
                     std::uint64_t seed) {
  require_dims(static_cast<std::size_t>(theta.size()), static_cast<std::size_t>(X.cols()), "sample_labels");
  if (!(sigma >= 0.0)) throw DomainError("sample_labels: sigma must be >= 0");
  Vector y = X * theta;
  if (sigma == 0.0) return y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] += sigma * law.sample(seed, static_cast<std::uint64_t>(i), 0, StreamRole::Noise);
  }
  return y;
}

Dataset make_dataset(std::shared_ptr<const model::CovarianceModel> model, std::size_t n,
                     model::ParameterVector theta, double sigma, const EntryLaw& design_law,
                     const EntryLaw& noise_law, std::uint64_t seed) {
  auto x = std::make_shared<const DesignMatrix>(sample_design(*model, n, design_law, seed));
  Vector y = sample_labels(*x, theta.theta, sigma, noise_law, seed);
  return Dataset{std::move(x), std::move(y),        std::move(theta), sigma,
                 std::move(model), noise_law, seed, DesignProvenance{design_law, seed}};
}

void write_design(const std::filesystem::path& path, const DesignMatrix& X) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write("HDLS", 4);
  put_u32(os, kDesignFormatVersion);
  put_u64(os, static_cast<std::uint64_t>(X.rows()));
  put_u64(os, static_cast<std::uint64_t>(X.cols()));
  put_u64(os, 0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < X.cols(); ++k) put_u64(os, std::bit_cast<std::uint64_t>(X(i, k)));
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

DesignMatrix read_design(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<unsigned char, 32> header{};
  is.read(reinterpret_cast<char*>(header.data()), 32);
  if (!is || std::memcmp(header.data(), "HDLS", 4) != 0) throw std::runtime_error("bad design file magic");
  const auto version = static_cast<std::uint32_t>(get_le(header.data() + 4, 4));
  if (version != kDesignFormatVersion) throw std::runtime_error("unsupported design file version");
  const auto n = static_cast<Eigen::Index>(get_le(header.data() + 8, 8));
  const auto d = static_cast<Eigen::Index>(get_le(header.data() + 16, 8));
  DesignMatrix x(n, d);
  std::array<unsigned char, 8> buf{};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      is.read(reinterpret_cast<char*>(buf.data()), 8);
      if (!is) throw std::runtime_error("truncated design file");
      x(i, k) = std::bit_cast<double>(get_le(buf.data(), 8));
    }
  }
  return x;
}

void write_design_metadata(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  os << "dataset.n = " << data.samples() << "\n";
  os << "dataset.d = " << data.dimension() << "\n";
  os << "dataset.seed = " << data.seed << "\n";
  os << "dataset.sigma = " << data.sigma << "\n";
  os << "dataset.noise_law = " << data.noise_law.name() << "\n";
  if (data.provenance) {
    os << "dataset.design_law = " << data.provenance->law.name() << "\n";
    os << "dataset.student_df = " << data.provenance->law.df << "\n";
  }
  os << "dataset.theta_delta = " << data.theta.delta << "\n";
  os << "dataset.theta_norm = " << data.theta.norm << "\n";
}

}  // namespace mnls::sampler
