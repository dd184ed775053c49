#include <fstream>
#include <sstream>

#include "hmmf/cli.hpp"

namespace hmmf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

StabKind parse_stab_kind(const std::string& name) {
  if (name == "mimetic-u") return StabKind::mimetic_u;
  if (name == "hybrid-b") return StabKind::hybrid_b;
  if (name == "mixed-b") return StabKind::mixed_b;
  throw ConfigError("unknown stabilization kind '" + name + "'");
}

std::vector<CellStabilization> read_stab_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stabilization matrix file: " + path);
  std::string tag, kind_name;
  long ncells = 0;
  if (!(in >> tag >> kind_name >> ncells) || tag != "stabmat")
    throw ConfigError("malformed stabilization matrix file header in " + path);
  const StabKind kind = parse_stab_kind(kind_name);
  std::vector<CellStabilization> stabs(ncells);
  for (long c = 0; c < ncells; ++c) {
    long m = 0;
    if (!(in >> m) || m < 1)
      throw ConfigError("malformed matrix size in " + path + " (cell " + std::to_string(c) + ")");
    Eigen::MatrixXd M(m, m);
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < m; ++j)
        if (!(in >> M(i, j)))
          throw ConfigError("missing matrix entries in " + path + " (cell " + std::to_string(c) +
                            ")");
    stabs[c] = {kind, M};
  }
  return stabs;
}

}  // namespace

FileConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  FileConfig cfg;
  StabilizationPreset preset;
  bool have_matrix_file = false;
  std::string matrix_file;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty())
      throw ConfigError("config key '" + key + "' has no value");

    if (key == "formulation") {
      if (value == "hybrid") cfg.scheme.formulation = Formulation::hybrid;
      else if (value == "mimetic") cfg.scheme.formulation = Formulation::mimetic;
      else if (value == "mixed") cfg.scheme.formulation = Formulation::mixed;
      else throw ConfigError("config key 'formulation': unknown value '" + value + "'");
    } else if (key == "stabilization.preset") {
      using Type = StabilizationPreset::Type;
      if (value == "hybrid-diagonal") preset.type = Type::hybrid_diagonal;
      else if (value == "mixed-strong") preset.type = Type::mixed_strong;
      else if (value == "ncfe") preset.type = Type::ncfe;
      else if (value == "mfe") preset.type = Type::mfe;
      else if (value == "two-point") preset.type = Type::two_point;
      else if (value == "random-u") preset.type = Type::random_u;
      else throw ConfigError("config key 'stabilization.preset': unknown value '" + value + "'");
      cfg.preset_set = true;
    } else if (key == "stabilization.alpha") {
      preset.alpha = parse_number(key, value);
    } else if (key == "stabilization.nu") {
      preset.nu = parse_number(key, value);
    } else if (key == "stabilization.beta") {
      preset.beta = parse_number(key, value);
    } else if (key == "stabilization.scale") {
      preset.scale = parse_number(key, value);
    } else if (key == "stabilization.seed") {
      preset.seed = static_cast<std::uint64_t>(parse_number(key, value));
    } else if (key == "stabilization.matrix-file") {
      have_matrix_file = true;
      matrix_file = value;
    } else if (key == "points") {
      if (value == "centroid") cfg.scheme.points = PointPolicy::centroid;
      else if (value == "super-admissible") cfg.scheme.points = PointPolicy::super_admissible;
      else if (value == "from-mesh") cfg.scheme.points = PointPolicy::from_mesh;
      else throw ConfigError("config key 'points': unknown value '" + value + "'");
      cfg.points_set = true;
    } else if (key == "condense") {
      if (value == "none") cfg.scheme.condense = CondenseMode::none;
      else if (value == "all") cfg.scheme.condense = CondenseMode::all;
      else if (value.rfind("list:", 0) == 0) {
        cfg.scheme.condense = CondenseMode::list;
        std::istringstream items(value.substr(5));
        std::string item;
        while (std::getline(items, item, ','))
          cfg.scheme.condense_list.push_back(static_cast<int>(parse_number(key, trim(item))));
      } else {
        throw ConfigError("config key 'condense': unknown value '" + value + "'");
      }
    } else if (key == "tensor") {
      if (value == "case") {
        cfg.tensor_mode = "case";
      } else {
        const auto parts = split_ws(value);
        if (parts.size() != 3)
          throw ConfigError("config key 'tensor': expected 'case' or three entries a11 a12 a22");
        cfg.tensor_mode = "constant";
        cfg.tensor(0, 0) = parse_number(key, parts[0]);
        cfg.tensor(0, 1) = cfg.tensor(1, 0) = parse_number(key, parts[1]);
        cfg.tensor(1, 1) = parse_number(key, parts[2]);
      }
    } else if (key == "source") {
      if (value != "zero" && value != "one" && value != "case-a" && value != "case-b" &&
          value != "case-c")
        throw ConfigError("config key 'source': unknown value '" + value + "'");
      cfg.source = value;
    } else if (key == "family") {
      for (const std::string& item : split_ws(value))
        cfg.family.push_back(static_cast<int>(parse_number(key, item)));
    } else if (key == "amplitude") {
      cfg.amplitude = parse_number(key, value);
    } else if (key == "seed") {
      cfg.mesh_seed = static_cast<std::uint64_t>(parse_number(key, value));
    } else if (key == "equivalence.convert") {
      if (value == "true") cfg.equivalence_convert = true;
      else if (value == "false") cfg.equivalence_convert = false;
      else throw ConfigError("config key 'equivalence.convert': expected true or false");
    } else if (key == "tol") {
      cfg.tol = parse_number(key, value);
    } else if (key == "order-threshold.p") {
      cfg.threshold_p = parse_number(key, value);
    } else if (key == "order-threshold.flux") {
      cfg.threshold_flux = parse_number(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  if (have_matrix_file) {
    cfg.scheme.preset.reset();
    cfg.scheme.cell_stab = read_stab_matrix_file(matrix_file);
    cfg.preset_set = true;
  } else {
    cfg.scheme.preset = preset;
  }
  return cfg;
}

Mesh mesh_from_spec(const std::string& spec) {
  if (spec.rfind("gen:", 0) != 0) return read_mesh(spec);

  std::istringstream items(spec.substr(4));
  std::vector<double> values;
  std::string item;
  while (std::getline(items, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("malformed mesh generator spec: " + spec);
    }
  }
  if (values.size() != 2 && values.size() != 4)
    throw ConfigError("mesh generator spec needs gen:nx,ny or gen:nx,ny,amplitude,seed");
  const int nx = static_cast<int>(values[0]);
  const int ny = static_cast<int>(values[1]);
  if (values.size() == 2 || values[2] == 0.0)
    return build_cartesian(nx, ny, Vec2(0, 0), Vec2(1, 1));
  return build_perturbed_quads(nx, ny, Vec2(0, 0), Vec2(1, 1), values[2],
                               static_cast<std::uint64_t>(values[3]));
}

}  // namespace hmmf
