#include <charconv>
#include <fstream>
#include <sstream>

#include "eqrn/error.hpp"
#include "eqrn/io.hpp"

namespace eqrn::io {

namespace {

constexpr const char* kMagic = "eqrn-model-file";

std::string hex(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

void write_vector(std::ostream& out, const Vector& v) {
  out << "vector " << v.size();
  for (Index i = 0; i < v.size(); ++i) out << ' ' << hex(v[i]);
  out << '\n';
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << "matrix " << m.rows() << ' ' << m.cols();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out << ' ' << hex(m(r, c));
  out << '\n';
}

void write_mlp(std::ostream& out, const nn::Mlp& mlp) {
  out << "mlp layers " << mlp.layers().size() << " l2 " << hex(mlp.l2()) << " constant_shape "
      << (mlp.constant_shape() ? 1 : 0) << " shape_unit " << mlp.shape_unit() << '\n';
  for (const auto& layer : mlp.layers()) {
    out << "layer " << layer.in_dim() << ' ' << layer.out_dim() << " dropout " << hex(layer.dropout)
        << " activations";
    for (auto a : layer.activations) out << ' ' << nn::to_string(a);
    out << '\n';
    write_matrix(out, layer.weights);
    write_vector(out, layer.bias);
  }
}

void write_network(std::ostream& out, const qreg::Network& network) {
  if (const auto* mlp = std::get_if<nn::Mlp>(&network)) {
    out << "network mlp\n";
    write_mlp(out, *mlp);
    return;
  }
  const auto& lstm = std::get<rnn::LstmStack>(network);
  out << "network lstm\n";
  out << "lstm layers " << lstm.layers().size() << " l2 " << hex(lstm.l2()) << '\n';
  for (const auto& layer : lstm.layers()) {
    out << "lstm_layer " << layer.input_dim() << ' ' << layer.hidden_dim() << '\n';
    write_matrix(out, layer.w_input);
    write_matrix(out, layer.w_hidden);
    write_vector(out, layer.bias);
  }
  out << "head\n";
  write_mlp(out, lstm.head());
}

void write_scaler(std::ostream& out, const nn::FeatureScaler& scaler) {
  out << "scaler\n";
  write_vector(out, scaler.mean);
  write_vector(out, scaler.sd);
}

const char* kind_name(ModelKind k) { return k == ModelKind::independent ? "independent" : "sequential"; }

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of file");
    return w;
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) fail("expected '" + w + "', found '" + got + "'");
  }
  double real() {
    const std::string w = word();
    double v = 0.0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v, std::chars_format::hex);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) fail("bad number '" + w + "'");
    return v;
  }
  Index integer() {
    const std::string w = word();
    long long v = 0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size() || v < 0) fail("bad count '" + w + "'");
    return static_cast<Index>(v);
  }
  Vector vector() {
    expect("vector");
    const Index n = integer();
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = real();
    return v;
  }
  Matrix matrix() {
    expect("matrix");
    const Index r = integer();
    const Index c = integer();
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = real();
    return m;
  }
  [[noreturn]] void fail(const std::string& msg) { throw DataError("model file: " + msg); }

 private:
  std::istream& in_;
};

nn::Mlp read_mlp(Reader& r) {
  r.expect("mlp");
  r.expect("layers");
  const Index n_layers = r.integer();
  r.expect("l2");
  const double l2 = r.real();
  r.expect("constant_shape");
  const bool constant_shape = r.integer() != 0;
  r.expect("shape_unit");
  const Index shape_unit = r.integer();
  std::vector<nn::DenseLayer> layers;
  for (Index l = 0; l < n_layers; ++l) {
    r.expect("layer");
    const Index in = r.integer();
    const Index out = r.integer();
    r.expect("dropout");
    const double dropout = r.real();
    r.expect("activations");
    std::vector<nn::Activation> acts;
    for (Index k = 0; k < out; ++k) acts.push_back(nn::activation_from_string(r.word()));
    Matrix w = r.matrix();
    Vector b = r.vector();
    if (w.rows() != out || w.cols() != in || b.size() != out) r.fail("layer shape mismatch");
    nn::DenseLayer layer(std::move(w), std::move(b), std::move(acts));
    layer.dropout = dropout;
    layers.push_back(std::move(layer));
  }
  return nn::Mlp(std::move(layers), l2, constant_shape, shape_unit);
}

qreg::Network read_network(Reader& r) {
  r.expect("network");
  const std::string type = r.word();
  if (type == "mlp") return read_mlp(r);
  if (type != "lstm") r.fail("unknown network type '" + type + "'");
  r.expect("lstm");
  r.expect("layers");
  const Index n_layers = r.integer();
  r.expect("l2");
  const double l2 = r.real();
  std::vector<rnn::LstmLayer> layers;
  for (Index l = 0; l < n_layers; ++l) {
    r.expect("lstm_layer");
    const Index in = r.integer();
    const Index hidden = r.integer();
    rnn::LstmLayer layer;
    layer.w_input = r.matrix();
    layer.w_hidden = r.matrix();
    layer.bias = r.vector();
    if (layer.w_input.rows() != 4 * hidden || layer.w_input.cols() != in || layer.w_hidden.rows() != 4 * hidden ||
        layer.w_hidden.cols() != hidden || layer.bias.size() != 4 * hidden) {
      r.fail("LSTM layer shape mismatch");
    }
    layers.push_back(std::move(layer));
  }
  r.expect("head");
  nn::Mlp head = read_mlp(r);
  return rnn::LstmStack(std::move(layers), std::move(head), l2);
}

nn::FeatureScaler read_scaler(Reader& r) {
  r.expect("scaler");
  nn::FeatureScaler s;
  s.mean = r.vector();
  s.sd = r.vector();
  if (s.mean.size() != s.sd.size()) r.fail("scaler size mismatch");
  return s;
}

ModelKind read_kind(Reader& r) {
  r.expect("kind");
  const std::string k = r.word();
  if (k == "independent") return ModelKind::independent;
  if (k == "sequential") return ModelKind::sequential;
  r.fail("unknown model kind '" + k + "'");
}

void read_header(Reader& r, const std::string& object) {
  r.expect(kMagic);
  const Index version = r.integer();
  if (version != kModelFormatVersion) r.fail("unsupported format version " + std::to_string(version));
  r.expect("object");
  const std::string got = r.word();
  if (got != object) r.fail("expected a " + object + " model, found '" + got + "'");
}

template <class Model>
void save_to(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_model(out, model);
  if (!out) throw DataError("error while writing '" + path + "'");
}

std::ifstream open_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return in;
}

}  // namespace

void write_model(std::ostream& out, const qreg::QuantileModel& model) {
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "object quantile\n";
  out << "kind " << kind_name(model.kind) << '\n';
  out << "tau0 " << hex(model.tau0) << '\n';
  out << "horizon " << model.horizon << '\n';
  out << "response_center " << hex(model.response_center) << '\n';
  out << "response_scale " << hex(model.response_scale) << '\n';
  write_scaler(out, model.scaler);
  write_network(out, model.network);
  out << "end\n";
}

void write_model(std::ostream& out, const EqrnModel& model) {
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "object eqrn\n";
  out << "kind " << kind_name(model.kind) << '\n';
  out << "tau0 " << hex(model.tau0) << '\n';
  out << "horizon " << model.horizon << '\n';
  out << "response_scale " << hex(model.response_scale) << '\n';
  out << "training_end " << (model.training_end.empty() ? "-" : model.training_end) << '\n';
  write_scaler(out, model.scaler);
  write_network(out, model.network);
  out << "end\n";
}

qreg::QuantileModel read_quantile_model(std::istream& in) {
  Reader r(in);
  read_header(r, "quantile");
  qreg::QuantileModel m;
  m.kind = read_kind(r);
  r.expect("tau0");
  m.tau0 = r.real();
  r.expect("horizon");
  m.horizon = r.integer();
  r.expect("response_center");
  m.response_center = r.real();
  r.expect("response_scale");
  m.response_scale = r.real();
  m.scaler = read_scaler(r);
  m.network = read_network(r);
  r.expect("end");
  return m;
}

EqrnModel read_eqrn_model(std::istream& in) {
  Reader r(in);
  read_header(r, "eqrn");
  EqrnModel m;
  m.kind = read_kind(r);
  r.expect("tau0");
  m.tau0 = r.real();
  r.expect("horizon");
  m.horizon = r.integer();
  r.expect("response_scale");
  m.response_scale = r.real();
  r.expect("training_end");
  m.training_end = r.word();
  if (m.training_end == "-") m.training_end.clear();
  m.scaler = read_scaler(r);
  m.network = read_network(r);
  r.expect("end");
  return m;
}

void save_model(const std::string& path, const qreg::QuantileModel& model) { save_to(path, model); }
void save_model(const std::string& path, const EqrnModel& model) { save_to(path, model); }

qreg::QuantileModel load_quantile_model(const std::string& path) {
  auto in = open_model(path);
  return read_quantile_model(in);
}

EqrnModel load_eqrn_model(const std::string& path) {
  auto in = open_model(path);
  return read_eqrn_model(in);
}

}  // namespace eqrn::io
