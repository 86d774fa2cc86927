#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gazelab/network.hpp"
#include "gazelab/synth.hpp"
#include "gazelab/tensor.hpp"
#include "gazelab/trainer.hpp"

namespace gazelab::io {

// All writers go through a temp file plus rename so readers never observe a
// partial file.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// Binary tensor format: magic "SALT", u16 version (1), u8 dtype (0 = f32),
// u8 rank, rank x u32 extents, then row-major f32 payload; all multi-byte
// fields little-endian.
std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes);
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// Netpbm images, maxval 255. Values are scaled to [0,1] on read and
// quantized by rounding on write. PPM P6 carries h x w x 3 tensors, PGM P5
// rank-2 maps.
void write_ppm(const std::filesystem::path& path, const Tensor& rgb);
Tensor read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Tensor& gray);
Tensor read_pgm(const std::filesystem::path& path);

// RFC-4180-style CSV with LF line endings.
std::string csv_escape(const std::string& field);
void write_csv(const std::filesystem::path& path,
               const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path);

// Fixation lists, one file per dataset: header image_id,row,col.
using FixationTable =
    std::vector<std::pair<std::string, metrics::FixationSet>>;
void write_fixations(const std::filesystem::path& path,
                     const FixationTable& table);
FixationTable read_fixations(const std::filesystem::path& path);

// Flat INI-style key=value configuration with '#' comments.
using Config = std::map<std::string, std::string>;
Config parse_config_text(const std::string& text);
Config read_config(const std::filesystem::path& path);
std::string render_config(const Config& cfg);
void write_config(const std::filesystem::path& path, const Config& cfg);

// Typed lookups; missing key with no fallback or an unparsable value
// throws ConfigError.
std::string config_str(const Config& cfg, const std::string& key);
std::string config_str(const Config& cfg, const std::string& key,
                       const std::string& fallback);
std::uint64_t config_u64(const Config& cfg, const std::string& key,
                         std::uint64_t fallback);
double config_f64(const Config& cfg, const std::string& key, double fallback);

// Network configuration <-> INI keys (input_h, input_w, encoder, pool_count,
// decoder_plan, net_seed). Encoder blocks serialize as
// "convsxchannels,..." e.g. "2x8,2x16".
Config network_config_to_ini(const nn::NetworkConfig& cfg);
nn::NetworkConfig network_config_from_ini(const Config& ini);

// Checkpoint: header (magic "SALC", u16 version, network config INI text,
// u32 epoch, u8 adam flag, u64 adam step), then a name-indexed sequence of
// tensor blobs (each one a TensorFile image) covering every parameter and,
// when present, the Adam moments.
struct LoadedCheckpoint {
  nn::Network net;
  std::size_t epoch = 0;
  bool has_adam = false;
  AdamState adam;
};
void save_checkpoint(const std::filesystem::path& path,
                     const nn::Network& net, std::size_t epoch,
                     const AdamState* adam = nullptr);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Dataset directory layout (written by the synth command, read by the
// others): manifest.csv, images/*.ppm, densities/*.salt, fixations.csv,
// and, when masks exist, masks/*.pgm + masks.csv + palette.csv.
struct DatasetBundle {
  std::vector<std::string> ids;
  std::vector<SynthSample> samples;
  bool has_masks = false;
};
void save_dataset(const std::filesystem::path& dir,
                  const std::vector<SynthSample>& samples);
DatasetBundle load_dataset(const std::filesystem::path& dir);

}  // namespace gazelab::io
