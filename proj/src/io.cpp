#include "gazelab/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "gazelab/error.hpp"

namespace fs = std::filesystem;

namespace gazelab::io {

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

namespace {

void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct Cursor {
  const std::string& bytes;
  std::size_t pos = 0;
  std::string what;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw ParseError(what + ": truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes[pos++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i)
      v |= static_cast<std::uint16_t>(
          static_cast<std::uint8_t>(bytes[pos + i]) << (8 * i));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string encode_tensor(const Tensor& t) {
  std::string out;
  out.reserve(12 + 4 * t.rank() + 4 * t.size());
  out += "SALT";
  put_u16(out, 1);
  put_u8(out, 0);  // f32
  put_u8(out, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t i = 0; i < t.rank(); ++i)
    put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
  for (double v : t.values()) put_f32(out, static_cast<float>(v));
  return out;
}

Tensor decode_tensor(const std::string& bytes) {
  Cursor cur{bytes, 0, "tensor file"};
  if (cur.str(4) != "SALT") throw ParseError("tensor file: bad magic");
  if (cur.u16() != 1) throw ParseError("tensor file: unsupported version");
  if (cur.u8() != 0) throw ParseError("tensor file: unsupported dtype");
  const std::size_t rank = cur.u8();
  if (rank < 1 || rank > 4) throw ParseError("tensor file: bad rank");
  std::vector<std::size_t> dims;
  std::size_t total = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    dims.push_back(cur.u32());
    if (dims.back() == 0) throw ParseError("tensor file: zero extent");
    total *= dims.back();
  }
  std::vector<double> values;
  values.reserve(total);
  for (std::size_t i = 0; i < total; ++i)
    values.push_back(static_cast<double>(cur.f32()));
  if (cur.pos != bytes.size())
    throw ParseError("tensor file: trailing bytes");
  return Tensor(std::move(dims), std::move(values));
}

void write_tensor(const fs::path& path, const Tensor& t) {
  atomic_write(path, encode_tensor(t));
}

Tensor read_tensor(const fs::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " (" + path.string() + ")");
  }
}

namespace {

std::uint8_t quantize_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// Header tokens of a netpbm file: whitespace-separated, '#' starts a
// comment running to end of line.
struct PnmHeader {
  std::size_t w = 0, h = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::string& bytes, const char* magic) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size()) throw ParseError("netpbm: truncated header");
    const std::size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#')
      ++pos;
    return bytes.substr(start, pos - start);
  };
  auto next_int = [&]() -> std::size_t {
    const std::string tok = next_token();
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      throw ParseError("netpbm: bad integer '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError("netpbm: bad integer '" + tok + "'");
    return static_cast<std::size_t>(v);
  };

  if (next_token() != magic)
    throw ParseError(std::string("netpbm: expected ") + magic);
  PnmHeader hdr;
  hdr.w = next_int();
  hdr.h = next_int();
  const std::size_t maxval = next_int();
  if (maxval != 255) throw ParseError("netpbm: maxval must be 255");
  if (hdr.w == 0 || hdr.h == 0) throw ParseError("netpbm: zero extent");
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw ParseError("netpbm: missing data separator");
  hdr.data_offset = pos + 1;
  return hdr;
}

}  // namespace

void write_ppm(const fs::path& path, const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3)
    throw ShapeError("ppm: tensor must be h x w x 3");
  std::string out =
      "P6\n" + std::to_string(rgb.dim(1)) + " " + std::to_string(rgb.dim(0)) +
      "\n255\n";
  out.reserve(out.size() + rgb.size());
  for (double v : rgb.values())
    out.push_back(static_cast<char>(quantize_byte(v)));
  atomic_write(path, out);
}

Tensor read_ppm(const fs::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader hdr = parse_pnm_header(bytes, "P6");
  const std::size_t need = hdr.w * hdr.h * 3;
  if (bytes.size() - hdr.data_offset < need)
    throw ParseError("ppm: truncated pixel data (" + path.string() + ")");
  Tensor t(hdr.h, hdr.w, 3);
  for (std::size_t i = 0; i < need; ++i)
    t[i] =
        static_cast<double>(
            static_cast<std::uint8_t>(bytes[hdr.data_offset + i])) /
        255.0;
  return t;
}

void write_pgm(const fs::path& path, const Tensor& gray) {
  if (gray.rank() != 2) throw ShapeError("pgm: tensor must be rank 2");
  std::string out =
      "P5\n" + std::to_string(gray.dim(1)) + " " +
      std::to_string(gray.dim(0)) + "\n255\n";
  out.reserve(out.size() + gray.size());
  for (double v : gray.values())
    out.push_back(static_cast<char>(quantize_byte(v)));
  atomic_write(path, out);
}

Tensor read_pgm(const fs::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader hdr = parse_pnm_header(bytes, "P5");
  const std::size_t need = hdr.w * hdr.h;
  if (bytes.size() - hdr.data_offset < need)
    throw ParseError("pgm: truncated pixel data (" + path.string() + ")");
  Tensor t(hdr.h, hdr.w);
  for (std::size_t i = 0; i < need; ++i)
    t[i] =
        static_cast<double>(
            static_cast<std::uint8_t>(bytes[hdr.data_offset + i])) /
        255.0;
  return t;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_csv(const fs::path& path,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += csv_escape(row[i]);
    }
    out.push_back('\n');
  }
  atomic_write(path, out);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&]() {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw ParseError("csv: stray quote mid-field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\n':
        end_row();
        break;
      case '\r':
        break;  // tolerate CRLF input
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  return parse_csv(read_file(path));
}

namespace {

std::size_t parse_index(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(std::string(what) + ": expected non-negative integer, got '" +
                     s + "'");
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

void write_fixations(const fs::path& path, const FixationTable& table) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"image_id", "row", "col"});
  for (const auto& [id, fix] : table)
    for (const auto& [r, c] : fix.points)
      rows.push_back({id, std::to_string(r), std::to_string(c)});
  write_csv(path, rows);
}

FixationTable read_fixations(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() ||
      rows.front() != std::vector<std::string>{"image_id", "row", "col"})
    throw ParseError("fixations: missing image_id,row,col header (" +
                     path.string() + ")");
  FixationTable table;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 3)
      throw ParseError("fixations: expected 3 fields per record");
    const auto [it, inserted] = index.try_emplace(row[0], table.size());
    if (inserted) table.emplace_back(row[0], metrics::FixationSet{});
    table[it->second].second.points.emplace_back(
        parse_index(row[1], "fixations"), parse_index(row[2], "fixations"));
  }
  return table;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key=value at line " +
                       std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError("config: empty key at line " + std::to_string(lineno));
    cfg[key] = value;
  }
  return cfg;
}

Config read_config(const fs::path& path) {
  return parse_config_text(read_file(path));
}

std::string render_config(const Config& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) out += k + "=" + v + "\n";
  return out;
}

void write_config(const fs::path& path, const Config& cfg) {
  atomic_write(path, render_config(cfg));
}

std::string config_str(const Config& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

std::string config_str(const Config& cfg, const std::string& key,
                       const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

std::uint64_t config_u64(const Config& cfg, const std::string& key,
                         std::uint64_t fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(it->second, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an integer");
  }
  if (used != it->second.size())
    throw ConfigError("config: key '" + key + "' is not an integer");
  return v;
}

double config_f64(const Config& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a number");
  }
  if (used != it->second.size())
    throw ConfigError("config: key '" + key + "' is not a number");
  return v;
}

Config network_config_to_ini(const nn::NetworkConfig& cfg) {
  Config ini;
  ini["input_h"] = std::to_string(cfg.input_h);
  ini["input_w"] = std::to_string(cfg.input_w);
  std::string enc;
  for (const auto& b : cfg.encoder_blocks) {
    if (!enc.empty()) enc += ",";
    enc += std::to_string(b.conv_count) + "x" + std::to_string(b.out_channels);
  }
  ini["encoder"] = enc;
  ini["pool_count"] = std::to_string(cfg.pool_count);
  std::string plan;
  for (std::size_t c : cfg.decoder_channel_plan) {
    if (!plan.empty()) plan += ",";
    plan += std::to_string(c);
  }
  ini["decoder_plan"] = plan;
  ini["net_seed"] = std::to_string(cfg.seed);
  return ini;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config: bad " + what + " '" + s + "'");
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

nn::NetworkConfig network_config_from_ini(const Config& ini) {
  nn::NetworkConfig cfg;
  cfg.input_h = config_u64(ini, "input_h", 0);
  cfg.input_w = config_u64(ini, "input_w", 0);
  if (cfg.input_h == 0 || cfg.input_w == 0)
    throw ConfigError("config: input_h and input_w are required");

  const std::string enc = config_str(ini, "encoder");
  cfg.encoder_blocks.clear();
  for (const std::string& tok : split(enc, ',')) {
    const auto x = tok.find('x');
    if (x == std::string::npos)
      throw ConfigError("config: encoder blocks look like '2x8,2x16'");
    nn::EncoderBlockSpec b;
    b.conv_count = parse_count(tok.substr(0, x), "encoder conv count");
    b.out_channels = parse_count(tok.substr(x + 1), "encoder channel count");
    cfg.encoder_blocks.push_back(b);
  }

  cfg.pool_count = config_u64(ini, "pool_count", 0);
  if (cfg.pool_count == 0)
    throw ConfigError("config: pool_count is required");

  cfg.decoder_channel_plan.clear();
  const std::string plan = config_str(ini, "decoder_plan", "");
  if (!plan.empty())
    for (const std::string& tok : split(plan, ','))
      cfg.decoder_channel_plan.push_back(
          parse_count(tok, "decoder plan entry"));

  cfg.seed = config_u64(ini, "net_seed", 1);
  cfg.validate();
  return cfg;
}

namespace {

void append_entry(std::vector<std::pair<std::string, std::string>>& entries,
                  const std::string& name, const KernelSet& k) {
  entries.emplace_back(name + ".w", encode_tensor(k.weights));
  entries.emplace_back(
      name + ".b",
      encode_tensor(Tensor(std::vector<std::size_t>{k.bias.size()}, k.bias)));
}

void restore_kernel(const std::map<std::string, std::string>& blobs,
                    const std::string& name, KernelSet& k) {
  const auto w = blobs.find(name + ".w");
  const auto b = blobs.find(name + ".b");
  if (w == blobs.end() || b == blobs.end())
    throw ParseError("checkpoint: missing tensor for '" + name + "'");
  Tensor weights = decode_tensor(w->second);
  Tensor bias = decode_tensor(b->second);
  if (weights.dims() != k.weights.dims() || bias.rank() != 1 ||
      bias.dim(0) != k.bias.size())
    throw ParseError("checkpoint: tensor extents for '" + name +
                     "' do not match the configured network");
  k.weights = std::move(weights);
  std::copy(bias.values().begin(), bias.values().end(), k.bias.begin());
}

}  // namespace

void save_checkpoint(const fs::path& path, const nn::Network& net,
                     std::size_t epoch, const AdamState* adam) {
  std::string out;
  out += "SALC";
  put_u16(out, 1);
  const std::string ini = render_config(network_config_to_ini(net.config));
  put_u32(out, static_cast<std::uint32_t>(ini.size()));
  out += ini;
  put_u32(out, static_cast<std::uint32_t>(epoch));
  put_u8(out, adam != nullptr ? 1 : 0);
  put_u64(out, adam != nullptr ? adam->t : 0);

  std::vector<std::pair<std::string, std::string>> entries;
  net.visit_params([&entries](const std::string& name, const KernelSet& k) {
    append_entry(entries, name, k);
  });
  if (adam != nullptr) {
    adam->m.visit([&entries](const std::string& name, const KernelSet& k) {
      append_entry(entries, "adam.m." + name, k);
    });
    adam->v.visit([&entries](const std::string& name, const KernelSet& k) {
      append_entry(entries, "adam.v." + name, k);
    });
  }

  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, blob] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out += blob;
  }
  atomic_write(path, out);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  const std::string bytes = read_file(path);
  Cursor cur{bytes, 0, "checkpoint"};
  if (cur.str(4) != "SALC") throw ParseError("checkpoint: bad magic");
  if (cur.u16() != 1) throw ParseError("checkpoint: unsupported version");
  const std::string ini_text = cur.str(cur.u32());
  const std::size_t epoch = cur.u32();
  const bool has_adam = cur.u8() != 0;
  const std::uint64_t adam_t = cur.u64();

  std::map<std::string, std::string> blobs;
  const std::size_t entry_count = cur.u32();
  for (std::size_t i = 0; i < entry_count; ++i) {
    const std::string name = cur.str(cur.u32());
    blobs[name] = cur.str(cur.u32());
  }
  if (cur.pos != bytes.size()) throw ParseError("checkpoint: trailing bytes");

  LoadedCheckpoint loaded;
  const nn::NetworkConfig cfg =
      network_config_from_ini(parse_config_text(ini_text));
  loaded.net = nn::build_network(cfg);
  loaded.epoch = epoch;
  loaded.has_adam = has_adam;
  loaded.net.visit_params([&blobs](const std::string& name, KernelSet& k) {
    restore_kernel(blobs, name, k);
  });
  if (has_adam) {
    loaded.adam = AdamState::for_network(loaded.net);
    loaded.adam.t = adam_t;
    loaded.adam.m.visit([&blobs](const std::string& name, KernelSet& k) {
      restore_kernel(blobs, "adam.m." + name, k);
    });
    loaded.adam.v.visit([&blobs](const std::string& name, KernelSet& k) {
      restore_kernel(blobs, "adam.v." + name, k);
    });
  }
  return loaded;
}

namespace {

std::string sample_id(std::size_t index) {
  std::string digits = std::to_string(index);
  while (digits.size() < 4) digits.insert(digits.begin(), '0');
  return "img_" + digits;
}

}  // namespace

void save_dataset(const fs::path& dir,
                  const std::vector<SynthSample>& samples) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "densities");

  bool any_masks = false;
  for (const auto& s : samples)
    if (!s.masks.empty()) any_masks = true;
  if (any_masks) fs::create_directories(dir / "masks");

  std::vector<std::vector<std::string>> manifest;
  manifest.push_back({"image_id", "image", "density"});
  std::vector<std::vector<std::string>> mask_rows;
  mask_rows.push_back({"image_id", "class", "file"});
  std::set<std::string> palette;
  FixationTable fixations;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string id = sample_id(i);
    const std::string image_rel = "images/" + id + ".ppm";
    const std::string density_rel = "densities/" + id + ".salt";
    write_ppm(dir / image_rel, samples[i].gaze.image);
    write_tensor(dir / density_rel, samples[i].gaze.density);
    manifest.push_back({id, image_rel, density_rel});
    fixations.emplace_back(id, samples[i].gaze.fixations);
    for (const auto& [cls, mask] : samples[i].masks) {
      const std::string mask_rel = "masks/" + id + "_" + cls + ".pgm";
      write_pgm(dir / mask_rel, mask);
      mask_rows.push_back({id, cls, mask_rel});
      palette.insert(cls);
    }
  }

  write_csv(dir / "manifest.csv", manifest);
  write_fixations(dir / "fixations.csv", fixations);
  if (any_masks) {
    write_csv(dir / "masks.csv", mask_rows);
    std::vector<std::vector<std::string>> palette_rows;
    palette_rows.push_back({"class"});
    for (const auto& cls : palette) palette_rows.push_back({cls});
    write_csv(dir / "palette.csv", palette_rows);
  }
}

DatasetBundle load_dataset(const fs::path& dir) {
  const auto manifest = read_csv(dir / "manifest.csv");
  if (manifest.empty() ||
      manifest.front() !=
          std::vector<std::string>{"image_id", "image", "density"})
    throw ParseError("dataset: manifest.csv needs an image_id,image,density "
                     "header (" + dir.string() + ")");

  DatasetBundle bundle;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 1; i < manifest.size(); ++i) {
    const auto& row = manifest[i];
    if (row.size() != 3)
      throw ParseError("dataset: manifest records need 3 fields");
    SynthSample s;
    s.gaze.image = read_ppm(dir / row[1]);
    s.gaze.density = read_tensor(dir / row[2]);
    index[row[0]] = bundle.samples.size();
    bundle.ids.push_back(row[0]);
    bundle.samples.push_back(std::move(s));
  }

  for (const auto& [id, fix] : read_fixations(dir / "fixations.csv")) {
    const auto it = index.find(id);
    if (it == index.end())
      throw ParseError("dataset: fixations reference unknown image '" + id +
                       "'");
    bundle.samples[it->second].gaze.fixations = fix;
  }
  for (const auto& s : bundle.samples)
    if (s.gaze.fixations.empty())
      throw ParseError("dataset: every image needs at least one fixation");

  if (fs::exists(dir / "masks.csv")) {
    const auto rows = read_csv(dir / "masks.csv");
    if (rows.empty() ||
        rows.front() != std::vector<std::string>{"image_id", "class", "file"})
      throw ParseError("dataset: masks.csv needs an image_id,class,file "
                       "header");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.size() != 3)
        throw ParseError("dataset: mask records need 3 fields");
      const auto it = index.find(row[0]);
      if (it == index.end())
        throw ParseError("dataset: masks reference unknown image '" + row[0] +
                         "'");
      Tensor mask = read_pgm(dir / row[2]);
      for (double& v : mask.values()) v = v > 0.5 ? 1.0 : 0.0;
      bundle.samples[it->second].masks[row[1]] = std::move(mask);
      bundle.has_masks = true;
    }
  }
  return bundle;
}

}  // namespace gazelab::io
