#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "ptycho/io.hpp"

namespace ptycho {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t crc_of(const std::vector<char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void append_f64(std::vector<char>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.insert(out.end(), buf, buf + 8);
}

double read_f64(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

void write_file(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write failed for " + path.string());
}

std::vector<char> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

// Collects arrays and their manifest entries.
class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  void real_frames(const std::string& name, const std::vector<RealField>& frames) {
    std::vector<char> bytes;
    std::vector<std::size_t> shape{frames.size(), 0, 0};
    if (!frames.empty()) shape = {frames.size(), frames[0].rows(), frames[0].cols()};
    for (const auto& f : frames) {
      for (double v : f) append_f64(bytes, v);
    }
    add(name, "f64", shape, bytes);
  }

  void complex_field(const std::string& name, const ComplexField& z) {
    std::vector<char> bytes;
    bytes.reserve(z.size() * 16);
    for (cplx v : z) {
      append_f64(bytes, v.real());
      append_f64(bytes, v.imag());
    }
    add(name, "c128", {z.rows(), z.cols()}, bytes);
  }

  json arrays() const { return arrays_; }

 private:
  void add(const std::string& name, const std::string& dtype, const std::vector<std::size_t>& shape,
           const std::vector<char>& bytes) {
    const std::string file = name + ".bin";
    write_file(dir_ / file, bytes);
    arrays_[name] = {{"file", file}, {"dtype", dtype}, {"shape", shape}, {"bytes", bytes.size()},
                     {"crc32", crc_of(bytes)}};
  }

  fs::path dir_;
  json arrays_ = json::object();
};

class Reader {
 public:
  Reader(fs::path dir, json arrays) : dir_(std::move(dir)), arrays_(std::move(arrays)) {}

  bool has(const std::string& name) const { return arrays_.contains(name); }

  std::vector<RealField> real_frames(const std::string& name) {
    const auto [shape, bytes] = load(name, "f64", 3);
    std::vector<RealField> frames;
    const char* p = bytes.data();
    for (std::size_t k = 0; k < shape[0]; ++k) {
      RealField f(shape[1], shape[2]);
      for (double& v : f) {
        v = read_f64(p);
        p += 8;
      }
      frames.push_back(std::move(f));
    }
    return frames;
  }

  ComplexField complex_field(const std::string& name) {
    const auto [shape, bytes] = load(name, "c128", 2);
    ComplexField z(shape[0], shape[1]);
    const char* p = bytes.data();
    for (cplx& v : z) {
      v = cplx(read_f64(p), read_f64(p + 8));
      p += 16;
    }
    return z;
  }

 private:
  std::pair<std::vector<std::size_t>, std::vector<char>> load(const std::string& name,
                                                               const std::string& dtype,
                                                               std::size_t rank) {
    if (!has(name)) throw CorruptFileError("manifest lists no array '" + name + "'");
    const json& e = arrays_.at(name);
    try {
      if (e.at("dtype").get<std::string>() != dtype) {
        throw CorruptFileError("array '" + name + "' has dtype " + e.at("dtype").get<std::string>() +
                               ", expected " + dtype);
      }
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != rank) throw CorruptFileError("array '" + name + "' has wrong rank");
      std::size_t count = dtype == "c128" ? 16 : 8;
      for (std::size_t s : shape) count *= s;
      const fs::path file = dir_ / e.at("file").get<std::string>();
      if (!fs::exists(file)) throw CorruptFileError("array file missing: " + file.string());
      auto bytes = read_file(file);
      if (bytes.size() != count) {
        throw CorruptFileError("array '" + name + "' holds " + std::to_string(bytes.size()) +
                               " bytes, manifest shape needs " + std::to_string(count));
      }
      if (crc_of(bytes) != e.at("crc32").get<std::uint32_t>()) {
        throw CorruptFileError("checksum mismatch in array '" + name + "'");
      }
      return {shape, std::move(bytes)};
    } catch (const json::exception& ex) {
      throw CorruptFileError("malformed manifest entry for '" + name + "': " + ex.what());
    }
  }

  fs::path dir_;
  json arrays_;
};

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

void write_manifest(const fs::path& dir, const json& manifest) {
  const std::string text = manifest.dump(2) + "\n";
  write_file(dir / "manifest.json", std::vector<char>(text.begin(), text.end()));
}

json read_manifest(const fs::path& dir, const std::string& kind) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw DataError("no manifest.json in " + dir.string());
  const auto bytes = read_file(path);
  json m;
  try {
    m = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& ex) {
    throw CorruptFileError("manifest is not valid JSON: " + std::string(ex.what()));
  }
  if (!m.is_object() || !m.contains("format_version")) {
    throw CorruptFileError("manifest lacks format_version");
  }
  if (!m["format_version"].is_number_integer() || m["format_version"].get<long>() != kContainerVersion) {
    throw UnsupportedVersionError("container format version " + m["format_version"].dump() +
                                  " is not supported (this build reads version " +
                                  std::to_string(kContainerVersion) + ")");
  }
  if (m.value("kind", std::string()) != kind) {
    throw DataError("container holds '" + m.value("kind", std::string("?")) + "', expected '" + kind + "'");
  }
  if (!m.contains("arrays") || !m["arrays"].is_object()) throw CorruptFileError("manifest lacks arrays");
  return m;
}

Provenance read_provenance(const json& m) {
  Provenance p;
  if (m.contains("provenance") && m["provenance"].is_object()) {
    for (const auto& [k, v] : m["provenance"].items()) p[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return p;
}

}  // namespace

void save_dataset(const fs::path& dir, const Dataset& data, const Provenance& provenance) {
  data.validate();
  prepare_dir(dir);
  Writer w(dir);
  w.real_frames("intensities", data.intensities);
  if (data.clean_intensities) w.real_frames("clean_intensities", *data.clean_intensities);
  if (data.truth_object) w.complex_field("truth_object", *data.truth_object);
  if (data.truth_probe) w.complex_field("truth_probe", *data.truth_probe);

  json offsets = json::array();
  for (const auto& o : data.geometry.offsets()) offsets.push_back({o.row, o.col});
  json m;
  m["format_version"] = kContainerVersion;
  m["kind"] = "dataset";
  m["geometry"] = {{"probe_side", data.geometry.probe_side()},
                   {"object_side", data.geometry.object_side()},
                   {"offsets", offsets}};
  m["arrays"] = w.arrays();
  if (data.noise_percent) m["noise_percent"] = *data.noise_percent;
  m["provenance"] = provenance;
  write_manifest(dir, m);
}

Dataset load_dataset(const fs::path& dir, Provenance* provenance) {
  const json m = read_manifest(dir, "dataset");
  try {
    const json& g = m.at("geometry");
    std::vector<Offset> offsets;
    for (const auto& o : g.at("offsets")) {
      offsets.push_back({o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>()});
    }
    Dataset d{ScanGeometry(g.at("probe_side").get<std::size_t>(), g.at("object_side").get<std::size_t>(),
                           std::move(offsets)),
              {}, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    Reader r(dir, m.at("arrays"));
    d.intensities = r.real_frames("intensities");
    if (r.has("clean_intensities")) d.clean_intensities = r.real_frames("clean_intensities");
    if (r.has("truth_object")) d.truth_object = r.complex_field("truth_object");
    if (r.has("truth_probe")) d.truth_probe = r.complex_field("truth_probe");
    if (m.contains("noise_percent")) d.noise_percent = m.at("noise_percent").get<double>();
    try {
      d.validate();
    } catch (const ContractError& e) {
      throw CorruptFileError(std::string("dataset fails validation: ") + e.what());
    }
    if (provenance) *provenance = read_provenance(m);
    return d;
  } catch (const json::exception& ex) {
    throw CorruptFileError("malformed manifest: " + std::string(ex.what()));
  } catch (const ContractError& e) {
    throw CorruptFileError(std::string("inconsistent container: ") + e.what());
  }
}

void save_reconstruction(const fs::path& dir, const Reconstruction& rec) {
  prepare_dir(dir);
  Writer w(dir);
  w.complex_field("probe", rec.probe);
  w.complex_field("object", rec.object);
  json m;
  m["format_version"] = kContainerVersion;
  m["kind"] = "reconstruction";
  m["arrays"] = w.arrays();
  m["provenance"] = rec.provenance;
  write_manifest(dir, m);
}

Reconstruction load_reconstruction(const fs::path& dir) {
  const json m = read_manifest(dir, "reconstruction");
  Reader r(dir, m.at("arrays"));
  Reconstruction rec;
  rec.probe = r.complex_field("probe");
  rec.object = r.complex_field("object");
  rec.provenance = read_provenance(m);
  return rec;
}

}  // namespace ptycho
