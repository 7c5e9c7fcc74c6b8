#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "study.hpp"
#include "version.hpp"

namespace dpg {

inline constexpr const char* solution_header = "dpg-elasticity-solution 1";
inline constexpr const char* mesh_header = "dpg-elasticity-mesh 1";

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("io_error", "cannot open " + path + " for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("io_error", "cannot open " + path);
  return is;
}

inline void close_out(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw Error("io_error", "write failed for " + path);
}

inline SpaceKind space_kind_from_string(const std::string& s) {
  for (SpaceKind k : {SpaceKind::H1, SpaceKind::Hdiv, SpaceKind::L2Vec, SpaceKind::L2Sym, SpaceKind::L2Skew, SpaceKind::TraceH12,
                      SpaceKind::TraceHm12, SpaceKind::BrokenH1, SpaceKind::BrokenHdiv})
    if (s == to_string(k)) return k;
  throw Error("bad_solution_file", "unknown space kind '" + s + "'");
}

template <class T>
T expect(std::istream& is, const std::string& word, const std::string& path) {
  std::string w;
  T v{};
  if (!(is >> w) || w != word || !(is >> v)) throw Error("bad_solution_file", path + ": expected '" + word + "'");
  return v;
}

}  // namespace detail

/**
 * Text layout:
 *   dpg-elasticity-solution 1
 *   formulation <name>
 *   p <p>
 *   generation <g>
 *   elements <n>
 *   free_dofs <n>
 *   slots <k>
 *   slot <name> <kind> <size>       (k times, each followed by <size> values)
 *   end
 */
inline void save_solution(const SolutionFields& f, const Mesh& mesh, const std::string& path) {
  auto os = detail::open_out(path);
  os << solution_header << '\n'
     << "formulation " << to_string(f.formulation) << '\n'
     << "p " << f.p << '\n'
     << "generation " << f.generation << '\n'
     << "elements " << mesh.num_triangles() << '\n'
     << "free_dofs " << f.free_dofs << '\n'
     << "slots " << f.slots.size() << '\n';
  for (std::size_t s = 0; s < f.slots.size(); ++s) {
    os << "slot " << f.names[s] << ' ' << to_string(f.kinds[s]) << ' ' << f.slots[s].size() << '\n';
    for (Index i = 0; i < f.slots[s].size(); ++i) os << format_double(f.slots[s](i)) << '\n';
  }
  os << "end\n";
  detail::close_out(os, path);
}

/// Reads a file from save_solution and checks it against `spec` and `mesh`.
inline SolutionFields load_solution(const std::string& path, const FormulationSpec& spec, const Mesh& mesh) {
  auto is = detail::open_in(path);
  std::string header;
  std::getline(is, header);
  if (header != solution_header) throw Error("version_mismatch", path + ": unsupported header '" + header + "'");
  SolutionFields f;
  const std::string form = detail::expect<std::string>(is, "formulation", path);
  try {
    f.formulation = formulation_from_string(form);
  } catch (const std::invalid_argument&) {
    throw Error("bad_solution_file", path + ": unknown formulation '" + form + "'");
  }
  if (f.formulation != spec.id) throw Error("space_mismatch", path + ": formulation " + form + " does not match " + to_string(spec.id));
  f.p = detail::expect<int>(is, "p", path);
  f.generation = detail::expect<int>(is, "generation", path);
  const Index elements = detail::expect<Index>(is, "elements", path);
  if (f.generation != mesh.generation() || elements != mesh.num_triangles())
    throw Error("mesh_mismatch", path + ": written for mesh generation " + std::to_string(f.generation) + " with " +
                                     std::to_string(elements) + " elements, got generation " +
                                     std::to_string(mesh.generation()) + " with " + std::to_string(mesh.num_triangles()));
  f.free_dofs = detail::expect<Index>(is, "free_dofs", path);
  const std::size_t nslots = detail::expect<std::size_t>(is, "slots", path);
  if (nslots != spec.trial.size()) throw Error("space_mismatch", path + ": slot count does not match the formulation");
  for (std::size_t s = 0; s < nslots; ++s) {
    const std::string name = detail::expect<std::string>(is, "slot", path);
    std::string kind;
    Index size = 0;
    if (!(is >> kind >> size)) throw Error("bad_solution_file", path + ": truncated slot descriptor");
    const SpaceKind k = detail::space_kind_from_string(kind);
    const TrialSlot& ts = spec.trial[s];
    if (name != ts.name || k != ts.kind) throw Error("space_mismatch", path + ": slot " + name + " (" + kind + ") does not match the formulation");
    if (size != make_trial_space(k, mesh, f.p).size())
      throw Error("space_mismatch", path + ": slot " + name + " has " + std::to_string(size) + " coefficients, the mesh needs a different count");
    VectorXd v(size);
    std::string tok;
    for (Index i = 0; i < size; ++i) {
      if (!(is >> tok)) throw Error("bad_solution_file", path + ": truncated values in slot " + name);
      try {
        v(i) = parse_double(tok);
      } catch (const std::exception&) {
        throw Error("bad_solution_file", path + ": malformed value '" + tok + "'");
      }
    }
    f.names.push_back(name);
    f.kinds.push_back(k);
    f.slots.push_back(std::move(v));
  }
  std::string end;
  if (!(is >> end) || end != "end") throw Error("bad_solution_file", path + ": missing end marker");
  return f;
}

/**
 * Text layout:
 *   dpg-elasticity-mesh 1
 *   generation <g>
 *   vertices <n>      then n lines "x y"
 *   triangles <m>     then m lines "v0 v1 v2"
 *   boundary <k>      then k lines "a b tag" with tag in {gamma0, gamma1}
 */
inline void save_mesh(const Mesh& mesh, const std::string& path) {
  auto os = detail::open_out(path);
  os << mesh_header << '\n' << "generation " << mesh.generation() << '\n' << "vertices " << mesh.num_vertices() << '\n';
  for (const Vec2& v : mesh.vertices()) os << format_double(v.x()) << ' ' << format_double(v.y()) << '\n';
  os << "triangles " << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "boundary " << mesh.boundary_tags().size() << '\n';
  for (const auto& [e, tag] : mesh.boundary_tags())
    os << e.first << ' ' << e.second << ' ' << (tag == BoundaryTag::Gamma0 ? "gamma0" : "gamma1") << '\n';
  detail::close_out(os, path);
}

inline Mesh load_mesh(const std::string& path) {
  auto is = detail::open_in(path);
  std::string header;
  std::getline(is, header);
  if (header != mesh_header) throw Error("version_mismatch", path + ": unsupported header '" + header + "'");
  const int gen = detail::expect<int>(is, "generation", path);
  std::vector<Vec2> v(detail::expect<std::size_t>(is, "vertices", path));
  std::string a, b;
  for (auto& x : v) {
    if (!(is >> a >> b)) throw Error("bad_mesh_file", path + ": truncated vertices");
    x = Vec2(parse_double(a), parse_double(b));
  }
  std::vector<std::array<Index, 3>> t(detail::expect<std::size_t>(is, "triangles", path));
  for (auto& x : t)
    if (!(is >> x[0] >> x[1] >> x[2])) throw Error("bad_mesh_file", path + ": truncated triangles");
  const std::size_t nb = detail::expect<std::size_t>(is, "boundary", path);
  std::map<VertexPair, BoundaryTag> tags;
  for (std::size_t i = 0; i < nb; ++i) {
    Index p = 0, q = 0;
    std::string tag;
    if (!(is >> p >> q >> tag) || (tag != "gamma0" && tag != "gamma1"))
      throw Error("bad_mesh_file", path + ": malformed boundary line");
    tags[sorted_pair(p, q)] = tag == "gamma0" ? BoundaryTag::Gamma0 : BoundaryTag::Gamma1;
  }
  try {
    return Mesh(std::move(v), std::move(t), std::move(tags), gen);
  } catch (const std::invalid_argument& e) {
    throw Error("bad_mesh_file", path + ": " + e.what());
  }
}

/// Lowercase hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io_error", "cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (is.read(buf.data(), buf.size()) || is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), std::size_t(is.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char h[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

struct ManifestArtifact {
  int step = -1;  // -1: study-level file
  std::string file;  // relative to the manifest directory
  std::string sha256;
};

struct StudyManifest {
  std::string code_version = version;
  std::map<std::string, std::string> config;
  std::vector<ManifestArtifact> artifacts;

  /// Hashes `file` (relative to dir) and records it.
  void add(const std::filesystem::path& dir, const std::string& file, int step = -1) {
    artifacts.push_back({step, file, sha256_file((dir / file).string())});
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "dpg-elasticity-manifest";
    j["version"] = 1;
    j["code_version"] = code_version;
    j["config"] = config;
    j["artifacts"] = nlohmann::json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back({{"step", a.step}, {"file", a.file}, {"sha256", a.sha256}});
    return j;
  }
};

inline void save_manifest(const StudyManifest& m, const std::string& path) {
  auto os = detail::open_out(path);
  os << m.to_json().dump(2) << '\n';
  detail::close_out(os, path);
}

/// Parses the manifest and checks that every artifact exists with a matching hash.
inline StudyManifest load_manifest(const std::string& path) {
  auto is = detail::open_in(path);
  StudyManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(is);
    if (j.at("format") != "dpg-elasticity-manifest" || j.at("version") != 1)
      throw Error("version_mismatch", path + ": unsupported manifest format");
    m.code_version = j.at("code_version").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    for (const auto& a : j.at("artifacts"))
      m.artifacts.push_back({a.at("step").get<int>(), a.at("file").get<std::string>(), a.at("sha256").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_manifest", path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  for (const auto& a : m.artifacts) {
    const auto f = (dir / a.file).string();
    if (!std::filesystem::exists(f)) throw Error("manifest_mismatch", "missing artifact " + f);
    if (sha256_file(f) != a.sha256) throw Error("manifest_mismatch", "hash mismatch for " + f);
  }
  return m;
}

}  // namespace dpg
