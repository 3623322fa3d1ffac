#include "dykcd/instance_io.hpp"

#include <fstream>
#include <json.hpp>

#include "dykcd/trace.hpp"

namespace dykcd {

namespace {

void write_real_array(std::ostream& os, const double* data, Eigen::Index count) {
  os << '[';
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i) os << ',';
    os << format_real(data[i]);
  }
  os << ']';
}

Penalty parse_penalty(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  const double lambda = j.value("lambda", 0.0);
  if (type == "zero") return Penalty::zero();
  if (type == "l1") return Penalty::l1(lambda);
  if (type == "group_l2") return Penalty::group_l2(lambda);
  if (type == "linf") return Penalty::linf(lambda);
  throw DataError("unknown penalty type: " + type);
}

Vector parse_vector(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("expected a JSON array of reals");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

void write_instance_json(std::ostream& os, const Instance& instance) {
  const auto& prob = instance.problem;
  os << "{\n  \"n\": " << prob.n() << ",\n  \"p\": " << prob.p() << ",\n  \"y\": ";
  write_real_array(os, prob.y().data(), prob.n());
  os << ",\n  \"blocks\": [";
  for (Eigen::Index i = 0; i < prob.d(); ++i) {
    const auto& blk = prob.blocks()[static_cast<size_t>(i)];
    os << (i ? ",\n    " : "\n    ") << "{\"cols\": " << blk.X.cols() << ", \"X_col_major\": ";
    write_real_array(os, blk.X.data(), blk.X.size());  // Eigen default storage is col-major
    os << ", \"penalty\": {\"type\": \"" << blk.penalty.name() << "\", \"lambda\": "
       << format_real(blk.penalty.lambda()) << "}}";
  }
  os << "\n  ]";
  if (instance.loss) {
    os << ",\n  \"loss\": {\"type\": \""
       << (instance.loss->kind() == SmoothLoss::Kind::quadratic ? "quadratic" : "logistic")
       << "\", \"y\": ";
    write_real_array(os, instance.loss->y().data(), instance.loss->n());
    os << "}";
  }
  os << "\n}\n";
}

void write_instance_file(const std::string& path, const Instance& instance) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write_instance_json(os, instance);
}

Instance read_instance_json(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid instance JSON: ") + e.what());
  }
  try {
    const Vector y = parse_vector(j.at("y"));
    const Eigen::Index n = y.size();
    if (j.contains("n") && j.at("n").get<Eigen::Index>() != n)
      throw DataError("instance JSON: n does not match y length");
    std::vector<Block> blocks;
    for (const auto& jb : j.at("blocks")) {
      const Eigen::Index cols = jb.at("cols").get<Eigen::Index>();
      const Vector flat = parse_vector(jb.at("X_col_major"));
      if (flat.size() != n * cols) throw DataError("instance JSON: block entry count mismatch");
      Matrix X(n, cols);
      std::copy(flat.data(), flat.data() + flat.size(), X.data());
      blocks.push_back(Block{std::move(X), parse_penalty(jb.at("penalty"))});
    }
    RegressionProblem prob(y, std::move(blocks));
    if (j.contains("p") && j.at("p").get<Eigen::Index>() != prob.p())
      throw DataError("instance JSON: p does not match block widths");
    std::optional<SmoothLoss> loss;
    if (j.contains("loss")) {
      const auto& jl = j.at("loss");
      const std::string type = jl.at("type").get<std::string>();
      const Vector ly = parse_vector(jl.at("y"));
      if (type == "quadratic")
        loss = SmoothLoss::quadratic(ly);
      else if (type == "logistic")
        loss = SmoothLoss::logistic(ly);
      else
        throw DataError("unknown loss type: " + type);
    }
    return Instance{std::move(prob), std::move(loss)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid instance JSON: ") + e.what());
  }
}

Instance read_instance_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_instance_json(is);
}

SmoothLoss instance_loss(const Instance& instance) {
  if (instance.loss) return *instance.loss;
  return SmoothLoss::quadratic(instance.problem.y());
}

}  // namespace dykcd
