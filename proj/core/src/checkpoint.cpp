#include "rltrack/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "rltrack/errors.hpp"

namespace rltrack {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'T', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagTrainerState = 1u << 0;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_tensors(std::ostream& os, const ParamStore& p) {
  for (const auto& t : tensor_views(p))
    os.write(reinterpret_cast<const char*>(t.data),
             static_cast<std::streamsize>(t.size) * sizeof(double));
}

void read_tensors(std::istream& is, ParamStore& p) {
  for (auto& t : tensor_views(p))
    is.read(reinterpret_cast<char*>(t.data),
            static_cast<std::streamsize>(t.size) * sizeof(double));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path.string());

  os.write(kMagic, sizeof kMagic);
  write_pod(os, kVersion);
  const std::uint32_t flags = ckpt.has_trainer_state ? kFlagTrainerState : 0;
  write_pod(os, flags);
  write_pod(os, ckpt.seed);
  write_pod(os, static_cast<std::int32_t>(ckpt.params.dims.feature));
  write_pod(os, static_cast<std::int32_t>(ckpt.params.dims.encode));
  write_pod(os, static_cast<std::int32_t>(ckpt.params.dims.hidden));
  write_tensors(os, ckpt.params);

  if (ckpt.has_trainer_state) {
    write_pod(os, ckpt.adam_step);
    write_tensors(os, ckpt.adam_m);
    write_tensors(os, ckpt.adam_v);
    write_pod(os, ckpt.next_epoch);
    write_pod(os, ckpt.best_reward);
    write_pod(os, ckpt.epochs_since_best);
    write_pod(os, static_cast<std::uint64_t>(ckpt.history.size()));
    os.write(reinterpret_cast<const char*>(ckpt.history.data()),
             static_cast<std::streamsize>(ckpt.history.size()) * sizeof(double));
  }
  if (!os) throw DataError("short write on checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path.string());

  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError("not a checkpoint file: " + path.string());

  std::uint32_t version = 0, flags = 0;
  read_pod(is, version);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " in " + path.string());
  read_pod(is, flags);

  Checkpoint ckpt;
  read_pod(is, ckpt.seed);
  std::int32_t d = 0, e = 0, h = 0;
  read_pod(is, d);
  read_pod(is, e);
  read_pod(is, h);
  Dims dims{d, e, h};
  validate(dims);
  ckpt.params = ParamStore::zeros(dims);
  read_tensors(is, ckpt.params);

  if (flags & kFlagTrainerState) {
    ckpt.has_trainer_state = true;
    read_pod(is, ckpt.adam_step);
    ckpt.adam_m = ParamStore::zeros(dims);
    ckpt.adam_v = ParamStore::zeros(dims);
    read_tensors(is, ckpt.adam_m);
    read_tensors(is, ckpt.adam_v);
    read_pod(is, ckpt.next_epoch);
    read_pod(is, ckpt.best_reward);
    read_pod(is, ckpt.epochs_since_best);
    std::uint64_t n = 0;
    read_pod(is, n);
    ckpt.history.resize(n);
    is.read(reinterpret_cast<char*>(ckpt.history.data()),
            static_cast<std::streamsize>(n) * sizeof(double));
  }
  if (!is) throw DataError("truncated checkpoint: " + path.string());
  return ckpt;
}

}  // namespace rltrack
