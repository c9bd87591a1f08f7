#include "gfm4ga/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace gfm4ga {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "gfm4ga-checkpoint";
constexpr int kVersion = 1;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, Eigen::Index expected_cols = -1) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::Index cols = n > 0 ? static_cast<Eigen::Index>(rows[0].size())
                            : std::max<Eigen::Index>(expected_cols, 0);
  Matrix m(n, cols);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != cols) {
      throw std::runtime_error("matrix rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = rows[r][c].get<double>();
    }
  }
  return m;
}

void write_le(std::ostream& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = (bits >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw std::runtime_error("checkpoint: truncated parameter block");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::vector<std::string> tensor_names(const EncoderConfig& config) {
  std::vector<std::string> names;
  for (int l = 1; l <= config.num_layers(); ++l) {
    for (int r : config.relations) {
      names.push_back("layer" + std::to_string(l) + ".relation" +
                      std::to_string(r));
    }
    names.push_back("layer" + std::to_string(l) + ".self");
  }
  for (const char* t : {"deviation.w1", "deviation.b1", "deviation.w2",
                        "deviation.b2"}) {
    names.emplace_back(t);
  }
  names.emplace_back("context.bilinear");
  return names;
}

}  // namespace

json estimator_to_json(const EstimatorParams& params) {
  json doc;
  doc["pca_mean"] = std::vector<double>(
      params.pca_mean.data(), params.pca_mean.data() + params.pca_mean.size());
  doc["pca_basis"] = matrix_to_json(params.pca_basis);
  doc["error_min"] = params.error_min;
  doc["error_max"] = params.error_max;
  doc["scorer"] = {{"w1", matrix_to_json(params.scorer.w1)},
                   {"b1", matrix_to_json(params.scorer.b1)},
                   {"w2", matrix_to_json(params.scorer.w2)},
                   {"b2", matrix_to_json(params.scorer.b2)}};
  return doc;
}

EstimatorParams estimator_from_json(const json& doc) {
  try {
    EstimatorParams p;
    const auto mean = doc.at("pca_mean").get<std::vector<double>>();
    p.pca_mean = Eigen::Map<const Vector>(mean.data(),
                                          static_cast<Eigen::Index>(mean.size()));
    p.pca_basis = matrix_from_json(doc.at("pca_basis"));
    p.error_min = doc.at("error_min").get<double>();
    p.error_max = doc.at("error_max").get<double>();
    const json& s = doc.at("scorer");
    p.scorer.w1 = matrix_from_json(s.at("w1"));
    p.scorer.b1 = matrix_from_json(s.at("b1"));
    p.scorer.w2 = matrix_from_json(s.at("w2"));
    p.scorer.b2 = matrix_from_json(s.at("b2"));
    if (p.pca_basis.rows() != p.pca_mean.size() ||
        p.scorer.w1.cols() != p.pca_basis.cols() + 1) {
      throw std::runtime_error("estimator: inconsistent dimensions");
    }
    return p;
  } catch (const json::exception& ex) {
    throw std::runtime_error(std::string("estimator: ") + ex.what());
  }
}

void save_estimator(const EstimatorParams& params,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << estimator_to_json(params).dump() << '\n';
}

EstimatorParams load_estimator(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return estimator_from_json(json::parse(in));
}

void write_checkpoint(const Model& model, std::ostream& out) {
  const EncoderConfig& config = model.encoder.config;
  ConstTensorRefs tensors = model.encoder.tensors();
  tensors.push_back(&model.head.bilinear);
  const auto names = tensor_names(config);

  json table = json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    table.push_back({{"name", names[i]},
                     {"rows", tensors[i]->rows()},
                     {"cols", tensors[i]->cols()}});
  }
  json header;
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["dims"] = config.dims;
  header["layers"] = config.num_layers();
  header["relations"] = config.relations;
  header["deviation_hidden"] = config.deviation_hidden;
  header["symmetric_normalization"] = config.symmetric_normalization;
  header["tensors"] = std::move(table);
  header["parameter_count"] = total_size(tensors);
  header["estimator"] = estimator_to_json(model.estimator);
  out << header.dump() << '\n';
  for (double v : flatten(tensors)) write_le(out, v);
}

Model read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("checkpoint: missing header");
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& ex) {
    throw std::runtime_error(std::string("checkpoint header: ") + ex.what());
  }
  if (header.value("format", "") != kFormat ||
      header.value("version", 0) != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format or version");
  }
  EncoderConfig config;
  config.dims = header.at("dims").get<std::vector<int>>();
  config.relations = header.at("relations").get<std::vector<int>>();
  config.deviation_hidden = header.at("deviation_hidden").get<int>();
  config.symmetric_normalization =
      header.at("symmetric_normalization").get<bool>();
  if (header.at("layers").get<int>() != config.num_layers()) {
    throw std::runtime_error("checkpoint: layer count disagrees with dims");
  }

  Model model;
  model.estimator = estimator_from_json(header.at("estimator"));
  model.encoder = EncoderParams::zeros(config);
  model.head = ContextHead::zeros(config.output_dim());
  TensorRefs tensors = model.encoder.tensors();
  tensors.push_back(&model.head.bilinear);

  const json& table = header.at("tensors");
  if (table.size() != tensors.size()) {
    throw std::runtime_error("checkpoint: tensor table size mismatch");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (table[i].at("rows").get<Eigen::Index>() != tensors[i]->rows() ||
        table[i].at("cols").get<Eigen::Index>() != tensors[i]->cols()) {
      throw std::runtime_error("checkpoint: tensor shape mismatch at " +
                               table[i].value("name", std::to_string(i)));
    }
  }
  std::vector<double> values(header.at("parameter_count").get<std::size_t>());
  if (values.size() != total_size(ConstTensorRefs(tensors.begin(),
                                                  tensors.end()))) {
    throw std::runtime_error("checkpoint: parameter count mismatch");
  }
  for (double& v : values) v = read_le(in);
  unflatten(values, tensors);
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(model, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace gfm4ga
