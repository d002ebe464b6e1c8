#include "recql/ffnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "recql/csv.hpp"
#include "recql/errors.hpp"
#include "recql/util.hpp"

namespace recql {

namespace {

// SplitMix64. The exact update is part of the artifact contract: a dataset
// regenerated from the same config must be byte-stable.
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next_u64() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform01() { return double(next_u64() >> 11) / 9007199254740992.0; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

// Dense row-major scratch matrix. All values are drawn dense and sliced into
// chunks afterwards, so the chunk setting never changes a single value.
struct Dense {
  int rows = 0, cols = 0;
  std::vector<double> v;
  Dense(int r, int c) : rows(r), cols(c), v(size_t(r) * size_t(c), 0.0) {}
  double& at(int r, int c) { return v[size_t(r) * cols + c]; }
  double at(int r, int c) const { return v[size_t(r) * cols + c]; }
};

ChunkedTensor block_of(const Dense& m, int r0, int c0, int h, int w) {
  std::vector<double> out(size_t(h) * size_t(w));
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out[size_t(r) * w + c] = m.at(r0 + r, c0 + c);
  return ChunkedTensor(uint32_t(h), uint32_t(w), std::move(out));
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

void validate_config(const FfnnConfig& config) {
  if (config.layer_sizes.size() < 2) {
    throw Error(ErrorKind::Config, "layer_sizes needs an input and an output layer");
  }
  for (int s : config.layer_sizes) {
    if (s < 1) throw Error(ErrorKind::Config, "layer sizes must be positive");
  }
  if (config.iterations < 1) throw Error(ErrorKind::Config, "iterations must be positive");
  if (config.batch_size < 1) throw Error(ErrorKind::Config, "batch_size must be positive");
  if (config.chunk < 1) throw Error(ErrorKind::Config, "chunk must be positive");
  if (!std::isfinite(config.alpha) || !(config.alpha > 0.0)) {
    throw Error(ErrorKind::Config, "alpha must be a positive finite number");
  }
  if (config.chunk < config.layer_sizes.back()) {
    throw Error(ErrorKind::Config,
                "chunk " + std::to_string(config.chunk) +
                    " is narrower than the output layer " +
                    std::to_string(config.layer_sizes.back()) +
                    "; softmax and one-hot labels need the whole output row in one chunk");
  }
}

std::string generate_program(const FfnnConfig& config) {
  validate_config(config);
  const bool rot = config.rotate_batch;
  const int top = config.weight_layers();
  const std::string l = std::to_string(top);
  const std::string hidden = std::to_string(top - 1);
  const std::string alpha = fmt_double(config.alpha);
  const std::string iters = std::to_string(config.iterations);
  const std::string data_dims =
      std::to_string(config.batch_size) + "," + std::to_string(config.chunk);
  const char* batch_col = rot ? "BATCH scalar, " : "";

  std::ostringstream out;
  out << "-- Feed-forward network training over chunked matrices.\n";
  out << "-- Layers ";
  for (size_t i = 0; i < config.layer_sizes.size(); ++i) {
    if (i) out << "-";
    out << config.layer_sizes[i];
  }
  out << ", batch " << config.batch_size << ", " << iters
      << " iterations, learning rate " << alpha << ".\n\n";

  out << "LOAD TABLE DATA_INPUT (" << batch_col << "COL scalar, VAL matrix(" << data_dims
      << ")) FROM 'data_input.csv';\n";
  out << "LOAD TABLE DATA_OUTPUT (" << batch_col << "COL scalar, VAL matrix(" << data_dims
      << ")) FROM 'data_output.csv';\n";
  out << "LOAD TABLE W_INIT (LAYER scalar, ROW scalar, COL scalar, MAT matrix("
      << config.chunk << "," << config.chunk << ")) FROM 'w_init.csv';\n";
  out << "LOAD TABLE B_INIT (LAYER scalar, COL scalar, VEC vector(" << config.chunk
      << ")) FROM 'b_init.csv';\n\n";

  out << "CREATE TABLE W[0][j:1..." << l << "](ROW, COL, MAT) AS\n"
      << "  SELECT WINIT.ROW, WINIT.COL, WINIT.MAT\n"
      << "  FROM W_INIT AS WINIT\n"
      << "  WHERE WINIT.LAYER = j;\n\n";

  out << "CREATE TABLE B[0][j:1..." << l << "](COL, VEC) AS\n"
      << "  SELECT BINIT.COL, BINIT.VEC\n"
      << "  FROM B_INIT AS BINIT\n"
      << "  WHERE BINIT.LAYER = j;\n\n";

  out << "CREATE TABLE A[i:0...][0](COL, ACT) AS\n"
      << "  SELECT DI.COL, DI.VAL\n"
      << "  FROM DATA_INPUT AS DI" << (rot ? "\n  WHERE DI.BATCH = i;" : ";") << "\n\n";

  out << "CREATE TABLE WI[i:0...][j:1..." << l << "](COL, VAL) AS\n"
      << "  SELECT W.COL, SUM(matmul(A.ACT, W.MAT))\n"
      << "  FROM W[i][j] AS W, A[i][j-1] AS A\n"
      << "  WHERE W.ROW = A.COL\n"
      << "  GROUP BY W.COL;\n\n";

  if (top >= 2) {
    out << "CREATE TABLE A[i:0...][j:1..." << hidden << "](COL, ACT) AS\n"
        << "  SELECT WI.COL, relu(WI.VAL + B.VEC)\n"
        << "  FROM WI[i][j] AS WI, B[i][j] AS B\n"
        << "  WHERE WI.COL = B.COL;\n\n";
  }

  out << "CREATE TABLE A[i:0...][j:" << l << "..." << l << "](COL, ACT) AS\n"
      << "  SELECT WI.COL, softmax(WI.VAL + B.VEC)\n"
      << "  FROM WI[i][j] AS WI, B[i][j] AS B\n"
      << "  WHERE WI.COL = B.COL;\n\n";

  out << "CREATE TABLE E[i:0...][j:" << l << "..." << l << "](COL, ERR) AS\n"
      << "  SELECT A.COL, crossentropyderiv(A.ACT, DO.VAL)\n"
      << "  FROM A[i][j] AS A, DATA_OUTPUT AS DO"
      << (rot ? "\n  WHERE DO.BATCH = i;" : ";") << "\n\n";

  if (top >= 2) {
    out << "CREATE TABLE E[i:0...][j:1..." << hidden << "](COL, ERR) AS\n"
        << "  SELECT W.ROW, SUM(matmul(E.ERR, t(W.MAT)) * reluderiv(A.ACT))\n"
        << "  FROM A[i][j] AS A, E[i][j+1] AS E, W[i][j+1] AS W\n"
        << "  WHERE A.COL = W.ROW AND W.COL = E.COL\n"
        << "  GROUP BY W.ROW;\n\n";
  }

  out << "CREATE TABLE W[i:1...][j:1..." << l << "](ROW, COL, MAT) AS\n"
      << "  SELECT W.ROW, W.COL, W.MAT - matmul(t(A.ACT), E.ERR) * " << alpha << "\n"
      << "  FROM W[i-1][j] AS W, E[i-1][j] AS E, A[i-1][j-1] AS A\n"
      << "  WHERE A.COL = W.ROW AND W.COL = E.COL;\n\n";

  out << "CREATE TABLE B[i:1...][j:1..." << l << "](COL, VEC) AS\n"
      << "  SELECT B.COL, B.VEC - reducebyrow(E.ERR) * " << alpha << "\n"
      << "  FROM B[i-1][j] AS B, E[i-1][j] AS E\n"
      << "  WHERE B.COL = E.COL;\n\n";

  out << "CREATE TABLE LOSS[i:0...](VAL) AS\n"
      << "  SELECT SUM(crossentropy(A.ACT, DO.VAL))\n"
      << "  FROM A[i][" << l << "] AS A, DATA_OUTPUT AS DO"
      << (rot ? "\n  WHERE DO.BATCH = i;" : ";") << "\n\n";

  out << "EXECUTE (\n"
      << "  FOR i IN 0..." << iters << ":\n"
      << "    EXPORT (LOSS[i]) TO 'loss_' + i + '.csv';\n"
      << "  FOR l IN 1..." << l << ": (\n"
      << "    MATERIALIZE W[" << iters << "][l];\n"
      << "    MATERIALIZE B[" << iters << "][l];\n"
      << "  )\n"
      << ");\n";
  return out.str();
}

SyntheticDataset generate_dataset(const FfnnConfig& config) {
  validate_config(config);
  const int in_dim = config.layer_sizes.front();
  const int out_dim = config.layer_sizes.back();
  const int batch = config.batch_size;
  const int chunk = config.chunk;
  const int batches = config.rotate_batch ? config.iterations + 1 : 1;

  Rng rng(config.seed);
  // The teacher is drawn first so it depends only on the seed and the layer
  // shape, not on how many batches follow it in the stream.
  Dense teacher(in_dim, out_dim);
  for (double& t : teacher.v) t = rng.uniform(-1.0, 1.0);

  std::vector<std::string> cols;
  std::vector<CellKind> in_kinds, out_kinds;
  if (config.rotate_batch) {
    cols.push_back("BATCH");
    in_kinds.push_back(CellKind::scalar());
    out_kinds.push_back(CellKind::scalar());
  }
  cols.push_back("COL");
  cols.push_back("VAL");
  in_kinds.push_back(CellKind::scalar());
  in_kinds.push_back(CellKind::tensor(uint32_t(batch), uint32_t(chunk)));
  out_kinds.push_back(CellKind::scalar());
  out_kinds.push_back(CellKind::tensor(uint32_t(batch), uint32_t(chunk)));

  SyntheticDataset ds;
  ds.data_input = make_relation(cols, in_kinds);
  ds.data_output = make_relation(cols, out_kinds);

  const int in_blocks = ceil_div(in_dim, chunk);
  for (int b = 0; b < batches; ++b) {
    Dense x(batch, in_dim);
    for (double& xv : x.v) xv = rng.uniform01();
    Dense y(batch, out_dim);
    for (int r = 0; r < batch; ++r) {
      int best = 0;
      double best_score = 0.0;
      for (int c = 0; c < out_dim; ++c) {
        double score = 0.0;
        for (int k = 0; k < in_dim; ++k) score += x.at(r, k) * teacher.at(k, c);
        if (c == 0 || score > best_score) {
          best = c;
          best_score = score;
        }
      }
      y.at(r, best) = 1.0;
    }
    for (int cb = 0; cb < in_blocks; ++cb) {
      const int c0 = cb * chunk;
      const int width = std::min(chunk, in_dim - c0);
      std::vector<Cell> row;
      if (config.rotate_batch) row.push_back(double(b));
      row.push_back(double(cb));
      row.push_back(block_of(x, 0, c0, batch, width));
      ds.data_input.add_row(std::move(row));
    }
    std::vector<Cell> row;
    if (config.rotate_batch) row.push_back(double(b));
    row.push_back(0.0);
    row.push_back(block_of(y, 0, 0, batch, out_dim));
    ds.data_output.add_row(std::move(row));
  }
  return ds;
}

InitialModel initialize_model(const FfnnConfig& config) {
  validate_config(config);
  const int chunk = config.chunk;
  Rng rng(~config.seed);

  InitialModel model;
  model.w_init = make_relation(
      {"LAYER", "ROW", "COL", "MAT"},
      {CellKind::scalar(), CellKind::scalar(), CellKind::scalar(),
       CellKind::tensor(uint32_t(chunk), uint32_t(chunk))});
  model.b_init =
      make_relation({"LAYER", "COL", "VEC"},
                    {CellKind::scalar(), CellKind::scalar(), CellKind::tensor(1, uint32_t(chunk))});

  for (int layer = 1; layer <= config.weight_layers(); ++layer) {
    const int fan_in = config.layer_sizes[layer - 1];
    const int fan_out = config.layer_sizes[layer];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Dense w(fan_in, fan_out);
    for (double& wv : w.v) wv = rng.uniform(-s, s);
    for (int rb = 0; rb < ceil_div(fan_in, chunk); ++rb) {
      for (int cb = 0; cb < ceil_div(fan_out, chunk); ++cb) {
        const int r0 = rb * chunk;
        const int c0 = cb * chunk;
        const int h = std::min(chunk, fan_in - r0);
        const int width = std::min(chunk, fan_out - c0);
        model.w_init.add_row(
            {double(layer), double(rb), double(cb), block_of(w, r0, c0, h, width)});
      }
    }
    for (int cb = 0; cb < ceil_div(fan_out, chunk); ++cb) {
      const int width = std::min(chunk, fan_out - cb * chunk);
      model.b_init.add_row({double(layer), double(cb), ChunkedTensor(1, uint32_t(width))});
    }
  }
  return model;
}

FfnnFiles write_ffnn_files(const FfnnConfig& config, const std::filesystem::path& dir) {
  validate_config(config);
  std::filesystem::create_directories(dir);

  FfnnFiles files;
  files.program = dir / "ffnn.rsql";
  {
    std::ofstream out(files.program);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + files.program.string());
    out << generate_program(config);
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing " + files.program.string());
  }

  SyntheticDataset ds = generate_dataset(config);
  InitialModel model = initialize_model(config);
  const std::pair<const char*, const Relation*> tables[] = {
      {"data_input.csv", &ds.data_input},
      {"data_output.csv", &ds.data_output},
      {"w_init.csv", &model.w_init},
      {"b_init.csv", &model.b_init},
  };
  for (const auto& [name, rel] : tables) {
    std::filesystem::path p = dir / name;
    write_relation_csv(p.string(), *rel);
    files.tables.push_back(p);
  }
  return files;
}

}  // namespace recql
