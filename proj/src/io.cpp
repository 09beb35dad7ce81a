#include "lorenzts/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lorenzts::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, v);
  bool ok = res.ptr == e && s.size() > 0 &&
            (res.ec == std::errc() || res.ec == std::errc::result_out_of_range);
  if (!ok) throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

/* Column-name check for "<prefix><index>" with 1-based contiguous indices. */
bool indexed_name(const std::string& name, const std::string& prefix, int idx) {
  return name == prefix + std::to_string(idx);
}

}  // namespace

std::string fmt_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Csv csv;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      csv.comments.push_back(t);
      continue;
    }
    if (!have_header) {
      csv.header = split_line(t);
      have_header = true;
    } else {
      csv.rows.push_back(split_line(t));
    }
  }
  if (!have_header) throw std::runtime_error(path + ": no header row");
  for (std::size_t r = 0; r < csv.rows.size(); ++r)
    if (csv.rows[r].size() != csv.header.size())
      throw std::runtime_error(path + ": data row " + std::to_string(r + 1) +
                               ": expected " + std::to_string(csv.header.size()) +
                               " fields, got " + std::to_string(csv.rows[r].size()));
  return csv;
}

void write_table(const std::string& path, const Table& table) {
  std::ofstream out = open_out(path);
  for (const std::string& c : table.comments) out << c << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

GroupedSeries load_grouped_csv(const std::string& path) {
  Csv csv = read_csv(path);
  if (csv.header.size() < 3)
    throw std::runtime_error(path + ": need columns period,n,<K share columns>");
  if (lower(csv.header[0]) != "period" || lower(csv.header[1]) != "n")
    throw std::runtime_error(path +
                             ": header must start with 'period,n' followed by "
                             "share (q1..qK) or cumulative (y1..yK) columns");
  const int K = static_cast<int>(csv.header.size()) - 2;
  const int T = static_cast<int>(csv.rows.size());
  if (T == 0) throw std::runtime_error(path + ": no data rows");

  enum class Mode { Shares, Cumulative, Auto } mode = Mode::Auto;
  char c0 = lower(csv.header[2])[0];
  if (c0 == 'q') mode = Mode::Shares;
  else if (c0 == 'y') mode = Mode::Cumulative;

  GroupedSeries data;
  data.q.resize(T, K);
  data.n.resize(T);
  data.labels.resize(T);
  Eigen::MatrixXd raw(T, K);
  for (int t = 0; t < T; ++t) {
    const auto& row = csv.rows[t];
    data.labels[t] = row[0];
    std::string where = path + ": period " + row[0];
    data.n[t] = parse_double(row[1], where + ", column n");
    if (!(data.n[t] > 0.0))
      throw std::runtime_error(where + ": sample size must be positive");
    for (int k = 0; k < K; ++k)
      raw(t, k) = parse_double(row[2 + k], where + ", column " + csv.header[2 + k]);
  }

  if (mode == Mode::Auto) {
    bool cumulative = true;
    for (int t = 0; t < T && cumulative; ++t) {
      for (int k = 1; k < K; ++k)
        if (raw(t, k) < raw(t, k - 1)) { cumulative = false; break; }
      if (std::abs(raw(t, K - 1) - 1.0) > 1e-9) cumulative = false;
    }
    mode = cumulative ? Mode::Cumulative : Mode::Shares;
  }

  for (int t = 0; t < T; ++t) {
    std::string where = path + ": period " + data.labels[t];
    Eigen::VectorXd q(K);
    if (mode == Mode::Cumulative) {
      double prev = 0.0;
      for (int k = 0; k < K; ++k) {
        if (raw(t, k) <= prev)
          throw std::runtime_error(where +
                                   ": cumulative shares must be strictly increasing");
        q[k] = raw(t, k) - prev;
        prev = raw(t, k);
      }
      if (std::abs(prev - 1.0) > 1e-6)
        throw std::runtime_error(where + ": cumulative shares must end at 1 (got " +
                                 fmt_double(prev) + ")");
      q /= prev;
    } else {
      q = raw.row(t).transpose();
      for (int k = 0; k < K; ++k)
        if (!(q[k] > 0.0))
          throw std::runtime_error(where + ": shares must be positive");
      double s = q.sum();
      if (std::abs(s - 1.0) > 1e-6)
        throw std::runtime_error(where + ": shares must sum to 1 (got " +
                                 fmt_double(s) + ")");
      q /= s;
    }
    data.q.row(t) = q.transpose();
  }

  data.p_grid = equal_grid(K);
  for (const std::string& c : csv.comments) {
    if (c.rfind("#p=", 0) != 0) continue;
    std::vector<double> p = parse_double_list(c.substr(3));
    if (static_cast<int>(p.size()) == K - 1) {
      p.insert(p.begin(), 0.0);
      p.push_back(1.0);
    }
    if (static_cast<int>(p.size()) != K + 1)
      throw std::runtime_error(path + ": #p= must list K+1 grid points or K-1 interior points");
    data.p_grid = Eigen::Map<Eigen::VectorXd>(p.data(), p.size());
  }

  validate(data);
  return data;
}

void write_grouped_csv(const std::string& path, const GroupedSeries& data) {
  Table t;
  std::string p = "#p=";
  for (Eigen::Index k = 0; k < data.p_grid.size(); ++k)
    p += (k ? "," : "") + fmt_double(data.p_grid[k]);
  t.comments.push_back(p);
  t.header = {"period", "n"};
  for (Eigen::Index k = 0; k < data.K(); ++k)
    t.header.push_back("q" + std::to_string(k + 1));
  for (Eigen::Index i = 0; i < data.T(); ++i) {
    std::vector<std::string> row{data.labels[i], fmt_double(data.n[i])};
    for (Eigen::Index k = 0; k < data.K(); ++k)
      row.push_back(fmt_double(data.q(i, k)));
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

void write_truth_csv(const std::string& path, const SimTruth& truth,
                     const Eigen::VectorXd& p_grid) {
  const Eigen::Index T = truth.u.rows(), d = truth.u.cols(),
                     P = truth.lorenz.cols();
  Table t;
  std::string p = "#p=";
  for (Eigen::Index k = 0; k < p_grid.size(); ++k)
    p += (k ? "," : "") + fmt_double(p_grid[k]);
  t.comments.push_back(p);
  t.header = {"period"};
  for (Eigen::Index j = 0; j < d; ++j)
    t.header.push_back("u_" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < d; ++j)
    t.header.push_back("param_" + std::to_string(j + 1));
  t.header.push_back("gini");
  for (Eigen::Index k = 0; k < P; ++k)
    t.header.push_back("L_" + std::to_string(k));
  for (Eigen::Index i = 0; i < T; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (Eigen::Index j = 0; j < d; ++j) row.push_back(fmt_double(truth.u(i, j)));
    for (Eigen::Index j = 0; j < d; ++j)
      row.push_back(fmt_double(truth.theta(i, j)));
    row.push_back(fmt_double(truth.gini[i]));
    for (Eigen::Index k = 0; k < P; ++k)
      row.push_back(fmt_double(truth.lorenz(i, k)));
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

SimTruth load_truth_csv(const std::string& path) {
  Csv csv = read_csv(path);
  int d = 0;
  while (1 + d < static_cast<int>(csv.header.size()) &&
         indexed_name(csv.header[1 + d], "u_", d + 1))
    ++d;
  if (d == 0) throw std::runtime_error(path + ": no u_ columns");
  int gini_col = 1 + 2 * d;
  if (gini_col >= static_cast<int>(csv.header.size()) ||
      csv.header[gini_col] != "gini")
    throw std::runtime_error(path + ": unexpected truth layout");
  int P = static_cast<int>(csv.header.size()) - gini_col - 1;
  const int T = static_cast<int>(csv.rows.size());

  SimTruth truth;
  truth.u.resize(T, d);
  truth.theta.resize(T, d);
  truth.gini.resize(T);
  truth.lorenz.resize(T, P);
  for (int i = 0; i < T; ++i) {
    const auto& row = csv.rows[i];
    std::string where = path + ": data row " + std::to_string(i + 1);
    for (int j = 0; j < d; ++j) {
      truth.u(i, j) = parse_double(row[1 + j], where);
      truth.theta(i, j) = parse_double(row[1 + d + j], where);
    }
    truth.gini[i] = parse_double(row[gini_col], where);
    for (int k = 0; k < P; ++k)
      truth.lorenz(i, k) = parse_double(row[gini_col + 1 + k], where);
  }
  return truth;
}

void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
  const Eigen::Index n = draws.tau2.rows(), d = draws.tau2.cols();
  const Eigen::Index T = draws.u_snaps.empty() ? 0 : draws.u_snaps[0].rows();
  Table t;
  t.header = {"draw"};
  if (draws.kind == ProcessKind::AR1) {
    for (Eigen::Index j = 0; j < d; ++j)
      t.header.push_back("mu_" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < d; ++j)
      t.header.push_back("rho_" + std::to_string(j + 1));
  }
  for (Eigen::Index j = 0; j < d; ++j)
    t.header.push_back("tau2_" + std::to_string(j + 1));
  t.header.push_back("psi");
  for (Eigen::Index tt = 0; tt < T; ++tt)
    for (Eigen::Index j = 0; j < d; ++j)
      t.header.push_back("u_" + std::to_string(tt + 1) + "_" +
                         std::to_string(j + 1));

  std::size_t s = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    if (draws.kind == ProcessKind::AR1) {
      for (Eigen::Index j = 0; j < d; ++j) row.push_back(fmt_double(draws.mu(i, j)));
      for (Eigen::Index j = 0; j < d; ++j) row.push_back(fmt_double(draws.rho(i, j)));
    }
    for (Eigen::Index j = 0; j < d; ++j) row.push_back(fmt_double(draws.tau2(i, j)));
    row.push_back(fmt_double(draws.psi[i]));
    if (s < draws.u_snap_draw.size() &&
        draws.u_snap_draw[s] == static_cast<int>(i)) {
      for (Eigen::Index tt = 0; tt < T; ++tt)
        for (Eigen::Index j = 0; j < d; ++j)
          row.push_back(fmt_double(draws.u_snaps[s](tt, j)));
      ++s;
    } else {
      row.resize(t.header.size());
    }
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

PosteriorDraws load_draws_csv(const std::string& path) {
  Csv csv = read_csv(path);
  const auto& h = csv.header;
  if (h.empty() || h[0] != "draw")
    throw std::runtime_error(path + ": first column must be 'draw'");
  int pos = 1;
  int d_mu = 0, d = 0;
  while (pos < static_cast<int>(h.size()) && indexed_name(h[pos], "mu_", d_mu + 1)) {
    ++d_mu;
    ++pos;
  }
  pos += d_mu;  // rho block mirrors mu block
  while (pos < static_cast<int>(h.size()) && indexed_name(h[pos], "tau2_", d + 1)) {
    ++d;
    ++pos;
  }
  if (d == 0 || (d_mu != 0 && d_mu != d) || pos >= static_cast<int>(h.size()) ||
      h[pos] != "psi")
    throw std::runtime_error(path + ": unexpected draws layout");
  int psi_col = pos;
  int n_u_cols = static_cast<int>(h.size()) - psi_col - 1;
  if (n_u_cols % d != 0)
    throw std::runtime_error(path + ": latent snapshot columns not a multiple of d");
  int T = n_u_cols / d;
  const int n = static_cast<int>(csv.rows.size());

  PosteriorDraws out;
  out.kind = d_mu ? ProcessKind::AR1 : ProcessKind::RW;
  if (d_mu) {
    out.mu.resize(n, d);
    out.rho.resize(n, d);
  }
  out.tau2.resize(n, d);
  out.psi.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& row = csv.rows[i];
    std::string where = path + ": data row " + std::to_string(i + 1);
    int c = 1;
    if (d_mu) {
      for (int j = 0; j < d; ++j) out.mu(i, j) = parse_double(row[c++], where);
      for (int j = 0; j < d; ++j) out.rho(i, j) = parse_double(row[c++], where);
    }
    for (int j = 0; j < d; ++j) out.tau2(i, j) = parse_double(row[c++], where);
    out.psi[i] = parse_double(row[c++], where);
    if (T > 0 && !row[psi_col + 1].empty()) {
      Eigen::MatrixXd u(T, d);
      for (int tt = 0; tt < T; ++tt)
        for (int j = 0; j < d; ++j)
          u(tt, j) = parse_double(row[psi_col + 1 + tt * d + j], where);
      out.u_snaps.push_back(std::move(u));
      out.u_snap_draw.push_back(i);
    }
  }
  return out;
}

void write_matrix_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m) {
  if (static_cast<Eigen::Index>(header.size()) != m.cols())
    throw std::invalid_argument("write_matrix_csv: header width mismatch");
  Table t;
  t.header = header;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(fmt_double(m(i, j)));
    t.rows.push_back(std::move(row));
  }
  write_table(path, t);
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  Csv csv = read_csv(path);
  Eigen::MatrixXd m(csv.rows.size(), csv.header.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i)
    for (std::size_t j = 0; j < csv.header.size(); ++j)
      m(i, j) = parse_double(csv.rows[i][j],
                             path + ": data row " + std::to_string(i + 1));
  return m;
}

std::map<std::string, std::string> parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

void write_config(const std::string& path,
                  const std::map<std::string, std::string>& kv) {
  std::ofstream out = open_out(path);
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& tok : split_line(text))
    out.push_back(parse_double(tok, "list value"));
  return out;
}

std::string join_double_list(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i)
    s += (i ? "," : "") + fmt_double(values[i]);
  return s;
}

}  // namespace lorenzts::io
