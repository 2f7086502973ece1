#include "rltrack/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rltrack/errors.hpp"
#include "rltrack/rng.hpp"

namespace rltrack {

void validate(const SynthConfig& cfg) {
  if (cfg.grid < 4) throw ConfigError("synth.grid must be >= 4");
  if (cfg.seq_len < 2) throw ConfigError("synth.seq_len must be >= 2");
  if (cfg.noise_std < 0.0) throw ConfigError("synth.noise_std must be >= 0");
  if (cfg.speed_min < 0.0 || cfg.speed_max < cfg.speed_min)
    throw ConfigError("synth.speed_min/speed_max must satisfy 0 <= min <= max");
  if (cfg.size_min <= 0.0 || cfg.size_max < cfg.size_min || cfg.size_max > 1.0)
    throw ConfigError("synth.size_min/size_max must satisfy 0 < min <= max <= 1");
  if (cfg.size_drift < 0.0) throw ConfigError("synth.size_drift must be >= 0");
  if (cfg.distractors < 0) throw ConfigError("synth.distractors must be >= 0");
  if (cfg.img_w <= 0.0 || cfg.img_h <= 0.0)
    throw ConfigError("synth.img_w/img_h must be > 0");
}

namespace {

struct MovingBox {
  BBox box;
  double vx = 0.0;
  double vy = 0.0;
};

// Keeps the box fully inside the unit square by reflecting the center at
// the size-dependent borders.
void reflect_into_bounds(MovingBox& m) {
  const double hx = m.box.w / 2.0;
  const double hy = m.box.h / 2.0;
  for (int pass = 0; pass < 4; ++pass) {
    if (m.box.cx < hx) {
      m.box.cx = 2.0 * hx - m.box.cx;
      m.vx = -m.vx;
    } else if (m.box.cx > 1.0 - hx) {
      m.box.cx = 2.0 * (1.0 - hx) - m.box.cx;
      m.vx = -m.vx;
    }
    if (m.box.cy < hy) {
      m.box.cy = 2.0 * hy - m.box.cy;
      m.vy = -m.vy;
    } else if (m.box.cy > 1.0 - hy) {
      m.box.cy = 2.0 * (1.0 - hy) - m.box.cy;
      m.vy = -m.vy;
    }
    const bool inside = m.box.cx >= hx && m.box.cx <= 1.0 - hx &&
                        m.box.cy >= hy && m.box.cy <= 1.0 - hy;
    if (inside) return;
  }
  m.box.cx = std::clamp(m.box.cx, hx, 1.0 - hx);
  m.box.cy = std::clamp(m.box.cy, hy, 1.0 - hy);
}

MovingBox spawn_box(const SynthConfig& cfg, Rng& rng) {
  MovingBox m;
  m.box.w = rng.uniform(cfg.size_min, cfg.size_max);
  m.box.h = rng.uniform(cfg.size_min, cfg.size_max);
  m.box.cx = rng.uniform(m.box.w / 2.0, 1.0 - m.box.w / 2.0);
  m.box.cy = rng.uniform(m.box.h / 2.0, 1.0 - m.box.h / 2.0);
  const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
  const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  m.vx = speed * std::cos(angle);
  m.vy = speed * std::sin(angle);
  reflect_into_bounds(m);
  return m;
}

void drift_size(MovingBox& m, const SynthConfig& cfg, Rng& rng) {
  m.box.w = std::clamp(m.box.w * (1.0 + rng.uniform(-cfg.size_drift, cfg.size_drift)),
                       cfg.size_min, cfg.size_max);
  m.box.h = std::clamp(m.box.h * (1.0 + rng.uniform(-cfg.size_drift, cfg.size_drift)),
                       cfg.size_min, cfg.size_max);
}

void advance(MovingBox& m, const SynthConfig& cfg, Rng& rng) {
  drift_size(m, cfg, rng);
  m.box.cx += m.vx;
  m.box.cy += m.vy;
  reflect_into_bounds(m);
}

// Coverage fraction of cell [x0,x1]x[y0,y1] by the box, times intensity.
double cell_coverage(const BBox& b, double x0, double x1, double y0, double y1) {
  const double ix = std::min(b.cx + b.w / 2.0, x1) - std::max(b.cx - b.w / 2.0, x0);
  const double iy = std::min(b.cy + b.h / 2.0, y1) - std::max(b.cy - b.h / 2.0, y0);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  return (ix * iy) / ((x1 - x0) * (y1 - y0));
}

Eigen::VectorXd rasterize(const std::vector<std::pair<BBox, double>>& boxes,
                          int grid) {
  Eigen::VectorXd cells = Eigen::VectorXd::Zero(grid * grid);
  const double step = 1.0 / grid;
  for (int r = 0; r < grid; ++r) {
    const double y0 = r * step, y1 = (r + 1) * step;
    for (int c = 0; c < grid; ++c) {
      const double x0 = c * step, x1 = (c + 1) * step;
      double v = 0.0;
      for (const auto& [box, intensity] : boxes)
        v += intensity * cell_coverage(box, x0, x1, y0, y1);
      cells[r * grid + c] = std::min(v, 1.0);
    }
  }
  return cells;
}

}  // namespace

SequenceData generate_sequence(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);

  MovingBox target = spawn_box(cfg, rng);
  std::vector<MovingBox> distractors;
  distractors.reserve(cfg.distractors);
  for (int i = 0; i < cfg.distractors; ++i) distractors.push_back(spawn_box(cfg, rng));

  SequenceData seq;
  seq.name = "synth-" + std::to_string(seed);
  seq.img_w = cfg.img_w;
  seq.img_h = cfg.img_h;
  seq.frames.reserve(cfg.seq_len);
  seq.ground_truth.reserve(cfg.seq_len);

  std::vector<std::pair<BBox, double>> visible;
  for (int t = 0; t < cfg.seq_len; ++t) {
    if (t > 0) {
      advance(target, cfg, rng);
      for (auto& d : distractors) advance(d, cfg, rng);
    }
    visible.clear();
    visible.emplace_back(target.box, 1.0);
    for (const auto& d : distractors) visible.emplace_back(d.box, 0.5);

    FrameObservation obs;
    obs.features = rasterize(visible, cfg.grid);
    if (cfg.noise_std > 0.0) {
      for (int i = 0; i < obs.features.size(); ++i)
        obs.features[i] = std::clamp(obs.features[i] + rng.normal(0.0, cfg.noise_std),
                                     0.0, 1.0);
    }
    if (t == 0) obs.location_hint = box_to_vec(target.box);
    seq.frames.push_back(std::move(obs));
    seq.ground_truth.push_back(target.box);
  }
  return seq;
}

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == '\t' || ch == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string base_name(const std::filesystem::path& p) {
  std::string stem = p.stem().string();
  const std::string suffix = ".features";
  if (stem.size() > suffix.size() &&
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem.resize(stem.size() - suffix.size());
  return stem;
}

}  // namespace

std::vector<BBox> load_ground_truth(const std::filesystem::path& gt_path,
                                    double img_w, double img_h) {
  if (img_w <= 0.0 || img_h <= 0.0)
    throw ConfigError("load_ground_truth: img_w/img_h must be > 0");
  std::ifstream gf(gt_path);
  if (!gf) throw DataError("cannot open ground-truth file: " + gt_path.string());

  const double eps = 1e-6 * std::max(img_w, img_h);
  std::vector<BBox> gts;
  std::string line;
  long line_no = 0;
  while (std::getline(gf, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    double px = 0, py = 0, pw = 0, ph = 0;
    if (fields.size() != 4 || !parse_double(fields[0], px) ||
        !parse_double(fields[1], py) || !parse_double(fields[2], pw) ||
        !parse_double(fields[3], ph))
      throw DataError("ground-truth file " + gt_path.string() + " line " +
                      std::to_string(line_no) + ": expected 'x,y,w,h' in pixels");
    if (pw <= 0.0 || ph <= 0.0)
      throw DataError("ground-truth file " + gt_path.string() + " line " +
                      std::to_string(line_no) + ": non-positive box size");
    if (px < -eps || py < -eps || px + pw > img_w + eps || py + ph > img_h + eps)
      throw DataError("ground-truth file " + gt_path.string() + " line " +
                      std::to_string(line_no) + ": box outside the " +
                      std::to_string(img_w) + "x" + std::to_string(img_h) + " image");
    BBox b;
    b.cx = (px + pw / 2.0) / img_w;
    b.cy = (py + ph / 2.0) / img_h;
    b.w = pw / img_w;
    b.h = ph / img_h;
    gts.push_back(b);
  }
  return gts;
}

SequenceData load_sequence(const std::filesystem::path& features_path,
                           const std::filesystem::path& gt_path,
                           double img_w, double img_h) {
  if (img_w <= 0.0 || img_h <= 0.0)
    throw ConfigError("load_sequence: img_w/img_h must be > 0");

  std::ifstream ff(features_path);
  if (!ff) throw DataError("cannot open feature file: " + features_path.string());

  std::string line;
  if (!std::getline(ff, line))
    throw DataError("feature file is empty: " + features_path.string());
  line = strip_cr(line);
  int dim = -1;
  long declared_frames = -1;
  if (!line.empty() && line[0] == '#') {
    std::istringstream hs(line.substr(1));
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("dim=", 0) == 0) dim = std::atoi(tok.c_str() + 4);
      else if (tok.rfind("frames=", 0) == 0) declared_frames = std::atol(tok.c_str() + 7);
    }
  }
  if (dim <= 0 || declared_frames < 0)
    throw DataError("feature file " + features_path.string() +
                    ": malformed header line, expected '# dim=D frames=N'");

  std::vector<Eigen::VectorXd> rows;
  long line_no = 1;
  while (std::getline(ff, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != dim)
      throw DataError("feature file " + features_path.string() + " line " +
                      std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " values, got " + std::to_string(fields.size()));
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      if (!parse_double(fields[i], v[i]))
        throw DataError("feature file " + features_path.string() + " line " +
                        std::to_string(line_no) + ": malformed value '" + fields[i] + "'");
    }
    rows.push_back(std::move(v));
  }
  if (rows.empty())
    throw DataError("feature file " + features_path.string() + ": no feature rows");
  if (declared_frames != static_cast<long>(rows.size()))
    throw DataError("feature file " + features_path.string() + ": header declares " +
                    std::to_string(declared_frames) + " frames but file contains " +
                    std::to_string(rows.size()));

  std::vector<BBox> gts = load_ground_truth(gt_path, img_w, img_h);

  if (gts.size() != rows.size())
    throw DataError("sequence length mismatch: " + std::to_string(rows.size()) +
                    " feature rows vs " + std::to_string(gts.size()) +
                    " ground-truth rows (" + features_path.string() + ", " +
                    gt_path.string() + ")");

  SequenceData seq;
  seq.name = base_name(features_path);
  seq.img_w = img_w;
  seq.img_h = img_h;
  seq.frames.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    FrameObservation obs;
    obs.features = std::move(rows[i]);
    if (i == 0) obs.location_hint = box_to_vec(gts[0]);
    seq.frames.push_back(std::move(obs));
  }
  seq.ground_truth = std::move(gts);
  return seq;
}

void save_sequence(const SequenceData& seq,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& gt_path) {
  if (seq.frames.empty()) throw DataError("save_sequence: empty sequence");
  if (seq.frames.size() != seq.ground_truth.size())
    throw DataError("save_sequence: frames/ground_truth length mismatch");

  const int dim = seq.feature_dim();
  std::ofstream ff(features_path);
  if (!ff) throw DataError("cannot write feature file: " + features_path.string());
  ff << "# dim=" << dim << " frames=" << seq.frames.size() << "\n";
  char buf[40];
  for (const auto& frame : seq.frames) {
    if (frame.features.size() != dim)
      throw DataError("save_sequence: inconsistent feature dimension");
    for (int i = 0; i < dim; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.features[i]);
      ff << (i ? " " : "") << buf;
    }
    ff << "\n";
  }

  std::ofstream gf(gt_path);
  if (!gf) throw DataError("cannot write ground-truth file: " + gt_path.string());
  for (const auto& b : seq.ground_truth) {
    const double px = (b.cx - b.w / 2.0) * seq.img_w;
    const double py = (b.cy - b.h / 2.0) * seq.img_h;
    std::snprintf(buf, sizeof buf, "%.17g", px);
    gf << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", py);
    gf << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", b.w * seq.img_w);
    gf << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", b.h * seq.img_h);
    gf << buf << "\n";
  }
}

int split_point(int length) { return length / 3; }

TrainEvalSplit split_train_eval(const SequenceData& seq) {
  if (seq.length() < 3)
    throw DataError("sequence '" + seq.name + "' has " +
                    std::to_string(seq.length()) +
                    " frames; need at least 3 to split");
  const int n = split_point(seq.length());
  TrainEvalSplit out;
  out.train.name = seq.name;
  out.train.img_w = seq.img_w;
  out.train.img_h = seq.img_h;
  out.train.frames.assign(seq.frames.begin(), seq.frames.begin() + n);
  out.train.ground_truth.assign(seq.ground_truth.begin(), seq.ground_truth.begin() + n);
  out.eval = seq;
  return out;
}

}  // namespace rltrack
