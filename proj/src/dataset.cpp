// SPDX-License-Identifier: Apache-2.0

#include "slsec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "slsec/error.hpp"

namespace slsec {

namespace {

// k mutually orthonormal random directions (k <= d), Gram-Schmidt over
// Gaussian draws.
Matrix orthonormal_directions(std::size_t d, int k, RngStream& rng) {
  Matrix dirs(static_cast<std::size_t>(k), d);
  for (int y = 0; y < k; ++y) {
    auto row = dirs.row(static_cast<std::size_t>(y));
    for (std::size_t j = 0; j < d; ++j) row[j] = rng.gaussian();
    for (int p = 0; p < y; ++p) {
      auto prev = dirs.row(static_cast<std::size_t>(p));
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += row[j] * prev[j];
      for (std::size_t j = 0; j < d; ++j) row[j] -= dot * prev[j];
    }
    double nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) nrm += row[j] * row[j];
    nrm = std::sqrt(nrm);
    require(nrm > 1e-12, ErrorKind::kDegenerate,
            "gen_synthetic: degenerate direction draw");
    for (std::size_t j = 0; j < d; ++j) row[j] /= nrm;
  }
  return dirs;
}

}  // namespace

Dataset gen_synthetic(std::size_t n, std::size_t d, int k,
                      const std::vector<double>& class_weights,
                      double separation, RngStream& rng) {
  require(k >= 1, ErrorKind::kArgument, "gen_synthetic: k must be >= 1");
  require(class_weights.size() == static_cast<std::size_t>(k),
          ErrorKind::kArgument, "gen_synthetic: weights length != k");
  require(separation >= 0.0, ErrorKind::kArgument,
          "gen_synthetic: separation must be >= 0");
  require(static_cast<std::size_t>(k) <= d, ErrorKind::kArgument,
          "gen_synthetic: needs k <= d for orthogonal class means");
  double wsum = 0.0;
  for (double w : class_weights) {
    require(w >= 0.0, ErrorKind::kArgument, "gen_synthetic: negative class weight");
    wsum += w;
  }
  require(std::abs(wsum - 1.0) <= 1e-9, ErrorKind::kArgument,
          "gen_synthetic: class weights must sum to 1");

  // Means drawn before any sample so the sample stream is n-independent.
  Matrix dirs = orthonormal_directions(d, k, rng);
  // Orthonormal u_y scaled by sep/sqrt(2) puts every pair of means exactly
  // `separation` apart.
  const double scale = separation / std::sqrt(2.0);

  Dataset ds;
  ds.k = k;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    int y = k - 1;
    double cum = 0.0;
    for (int c = 0; c < k; ++c) {
      cum += class_weights[static_cast<std::size_t>(c)];
      if (u < cum) {
        y = c;
        break;
      }
    }
    ds.labels[i] = y;
    auto mean = dirs.row(static_cast<std::size_t>(y));
    auto row = ds.features.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] = scale * mean[j] + rng.gaussian();
  }
  return ds;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  std::string t = trim(cell);
  std::size_t pos = 0;
  double v = 0.0;
  bool ok = !t.empty();
  if (ok) {
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      ok = false;
    }
  }
  if (!ok || pos != t.size()) {
    raise(ErrorKind::kFormat, "load_csv: non-numeric cell at row " +
                                  std::to_string(row) + ", column " +
                                  std::to_string(col));
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& feature_columns) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "load_csv: cannot open " + path);
  std::string header;
  if (!std::getline(in, header) || trim(header).empty()) {
    raise(ErrorKind::kFormat, "load_csv: empty file " + path);
  }
  std::vector<std::string> names = split_csv_line(header);
  for (auto& nm : names) nm = trim(nm);

  auto col_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(names.begin(), names.end(), name);
    require(it != names.end(), ErrorKind::kFormat,
            "load_csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  };

  std::size_t label_idx = col_index(label_column);
  std::vector<std::size_t> feat_idx;
  if (feature_columns.empty()) {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (j != label_idx) feat_idx.push_back(j);
  } else {
    for (const auto& nm : feature_columns) feat_idx.push_back(col_index(nm));
  }
  require(!feat_idx.empty(), ErrorKind::kFormat, "load_csv: no feature columns");

  std::vector<double> values;
  std::vector<long long> raw_labels;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;  // 1-based data rows
    std::vector<std::string> cells = split_csv_line(line);
    require(cells.size() == names.size(), ErrorKind::kFormat,
            "load_csv: row " + std::to_string(row) + " has " +
                std::to_string(cells.size()) + " cells, expected " +
                std::to_string(names.size()));
    double lv = parse_cell(cells[label_idx], row, label_idx + 1);
    if (std::floor(lv) != lv) {
      raise(ErrorKind::kFormat, "load_csv: label at row " + std::to_string(row) +
                                    " is not an integer");
    }
    raw_labels.push_back(static_cast<long long>(lv));
    for (std::size_t j : feat_idx) values.push_back(parse_cell(cells[j], row, j + 1));
  }
  require(row > 0, ErrorKind::kFormat, "load_csv: no data rows in " + path);

  // Remap labels to [0, k) preserving sorted original order.
  std::vector<long long> uniq = raw_labels;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::map<long long, int> remap;
  for (std::size_t i = 0; i < uniq.size(); ++i)
    remap[uniq[i]] = static_cast<int>(i);

  Dataset ds;
  ds.k = static_cast<int>(uniq.size());
  ds.label_values = uniq;
  ds.labels.reserve(raw_labels.size());
  for (long long rl : raw_labels) ds.labels.push_back(remap[rl]);
  ds.features = Matrix(row, feat_idx.size());
  ds.features.data = std::move(values);
  require(ds.features.all_finite(), ErrorKind::kFormat,
          "load_csv: non-finite value in " + path);
  return ds;
}

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(in.gcount() == 4, ErrorKind::kFormat, "load_idx: truncated " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  require(img.good(), ErrorKind::kIo, "load_idx: cannot open " + images_path);
  std::uint32_t magic = read_u32_be(img, "image magic");
  require(magic == 0x00000803u, ErrorKind::kFormat,
          "load_idx: bad image magic in " + images_path);
  std::uint32_t count = read_u32_be(img, "image count");
  std::uint32_t h = read_u32_be(img, "image height");
  std::uint32_t w = read_u32_be(img, "image width");

  std::ifstream lab(labels_path, std::ios::binary);
  require(lab.good(), ErrorKind::kIo, "load_idx: cannot open " + labels_path);
  std::uint32_t lmagic = read_u32_be(lab, "label magic");
  require(lmagic == 0x00000801u, ErrorKind::kFormat,
          "load_idx: bad label magic in " + labels_path);
  std::uint32_t lcount = read_u32_be(lab, "label count");
  require(count == lcount, ErrorKind::kFormat,
          "load_idx: image/label count mismatch (" + std::to_string(count) +
              " vs " + std::to_string(lcount) + ")");

  const std::size_t px = static_cast<std::size_t>(h) * w;
  Dataset ds;
  ds.features = Matrix(count, px);
  std::vector<unsigned char> buf(px);
  for (std::uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(px));
    require(static_cast<std::size_t>(img.gcount()) == px, ErrorKind::kFormat,
            "load_idx: truncated image data");
    auto row = ds.features.row(i);
    for (std::size_t j = 0; j < px; ++j) row[j] = buf[j] / 255.0;
  }
  ds.labels.resize(count);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    char b;
    lab.read(&b, 1);
    require(lab.gcount() == 1, ErrorKind::kFormat, "load_idx: truncated label data");
    ds.labels[i] = static_cast<unsigned char>(b);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.k = max_label + 1;
  return ds;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             double test_fraction,
                                             RngStream& rng) {
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorKind::kArgument,
          "train_test_split: fraction must be in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(data.k));
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  std::vector<std::size_t> train_idx, test_idx;
  for (auto& members : by_class) {
    require(members.size() >= 2, ErrorKind::kArgument,
            "train_test_split: a class has fewer than 2 samples");
    rng.shuffle(members);
    auto want = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    want = std::clamp<std::size_t>(want, 1, members.size() - 1);
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + want);
    train_idx.insert(train_idx.end(), members.begin() + want, members.end());
  }
  rng.shuffle(train_idx);
  rng.shuffle(test_idx);

  auto take = [&](const std::vector<std::size_t>& idx, SplitTag tag) {
    Dataset out;
    out.k = data.k;
    out.tag = tag;
    out.label_values = data.label_values;
    out.features = Matrix(idx.size(), data.dim());
    out.labels.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto src = data.features.row(idx[r]);
      std::copy(src.begin(), src.end(), out.features.row(r).begin());
      out.labels.push_back(data.labels[idx[r]]);
    }
    return out;
  };
  return {take(train_idx, SplitTag::kTrain), take(test_idx, SplitTag::kTest)};
}

Matrix one_hot(const std::vector<int>& labels, int k) {
  Matrix m(labels.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < k, ErrorKind::kArgument,
            "one_hot: label out of range");
    m.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

}  // namespace slsec
