#include "glrc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "glrc/error.hpp"

namespace glrc {
namespace {

constexpr char kMagic[4] = {'G', 'L', 'R', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 8 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::vector<std::pair<std::size_t, std::size_t>> tensor_shapes(const CheckpointHeader& h) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes{{std::size_t{h.users} + h.items, h.dim}};
  if (h.kind == ModelKind::student) {
    for (std::uint32_t l = 0; l < h.layers; ++l) shapes.emplace_back(h.dim, h.dim);
  }
  return shapes;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& h = ckpt.header;
  const auto shapes = tensor_shapes(h);
  if (shapes.size() != ckpt.tensors.size()) throw InvalidShape("checkpoint: tensor count does not match header");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(h.kind));
  put_u32(out, h.users);
  put_u32(out, h.items);
  put_u32(out, h.dim);
  put_u32(out, h.layers);
  put_u32(out, std::bit_cast<std::uint32_t>(h.leaky_slope));
  put_u32(out, h.flags);
  for (std::size_t t = 0; t < shapes.size(); ++t) {
    const auto& m = ckpt.tensors[t];
    if (m.rows() != shapes[t].first || m.cols() != shapes[t].second) {
      throw InvalidShape("checkpoint: tensor " + std::to_string(t) + " shape does not match header");
    }
    for (double v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic (not a GLRC file)");
  }
  const std::uint8_t* p = bytes.data() + 4;
  if (get_u32(p) != kCheckpointVersion) throw DataError("checkpoint: unsupported format version");
  Checkpoint ckpt;
  auto& h = ckpt.header;
  const auto kind = get_u32(p + 4);
  if (kind != 1 && kind != 2) throw DataError("checkpoint: unknown model kind");
  h.kind = static_cast<ModelKind>(kind);
  h.users = get_u32(p + 8);
  h.items = get_u32(p + 12);
  h.dim = get_u32(p + 16);
  h.layers = get_u32(p + 20);
  h.leaky_slope = std::bit_cast<float>(get_u32(p + 24));
  h.flags = get_u32(p + 28);

  std::size_t expected = kHeaderBytes;
  const auto shapes = tensor_shapes(h);
  for (const auto& [r, c] : shapes) expected += 4 * r * c;
  if (bytes.size() != expected) {
    throw DataError("checkpoint: payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                    std::to_string(expected));
  }
  const std::uint8_t* cursor = bytes.data() + kHeaderBytes;
  for (const auto& [r, c] : shapes) {
    DenseMatrix m(r, c);
    for (double& v : m.values()) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(cursor)));
      cursor += 4;
    }
    ckpt.tensors.push_back(std::move(m));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt, const CheckpointMeta& meta) {
  const auto bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  nlohmann::json j{{"config_hash", meta.config_hash},
                   {"seed", meta.seed},
                   {"epoch", meta.epoch},
                   {"validation_recall20", meta.validation_recall},
                   {"kind", ckpt.header.kind == ModelKind::teacher ? "teacher" : "student"}};
  std::ofstream side(path.string() + ".json");
  if (!side) throw DataError("cannot write " + path.string() + ".json");
  side << j.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw DataError("cannot open checkpoint metadata " + path.string() + ".json");
  try {
    const auto j = nlohmann::json::parse(in);
    return CheckpointMeta{j.at("config_hash").get<std::string>(), j.at("seed").get<std::uint64_t>(),
                          j.at("epoch").get<std::size_t>(), j.at("validation_recall20").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint metadata: " + std::string(e.what()));
  }
}

Checkpoint to_checkpoint(const TeacherModel& teacher) {
  Checkpoint c;
  c.header = {ModelKind::teacher, teacher.user_count(), teacher.item_count(), teacher.config().dim,
              teacher.config().layers, 0.0f, teacher.config().average_layers ? 1u : 0u};
  c.tensors.push_back(teacher.embeddings());
  return c;
}

Checkpoint to_checkpoint(const StudentModel& student) {
  Checkpoint c;
  const auto& cfg = student.config();
  c.header = {ModelKind::student, student.layout().users, student.layout().items, cfg.dim, cfg.layers,
              static_cast<float>(cfg.leaky_slope), 0u};
  c.tensors.push_back(student.embeddings());
  for (const auto& w : student.weights()) c.tensors.push_back(w);
  return c;
}

TeacherModel teacher_from_checkpoint(const Checkpoint& ckpt, const InteractionSet& train) {
  const auto& h = ckpt.header;
  if (h.kind != ModelKind::teacher) throw DataError("checkpoint is not a teacher model");
  if (h.users != train.user_count() || h.items != train.item_count()) {
    throw DataError("teacher checkpoint has " + std::to_string(h.users) + " users / " + std::to_string(h.items) +
                    " items, data has " + std::to_string(train.user_count()) + " / " +
                    std::to_string(train.item_count()));
  }
  return TeacherModel(train, TeacherConfig{h.dim, h.layers, (h.flags & 1u) != 0}, ckpt.tensors.at(0));
}

StudentModel student_from_checkpoint(const Checkpoint& ckpt) {
  const auto& h = ckpt.header;
  if (h.kind != ModelKind::student) throw DataError("checkpoint is not a student model");
  std::vector<DenseMatrix> weights(ckpt.tensors.begin() + 1, ckpt.tensors.end());
  return StudentModel(NodeLayout{h.users, h.items}, StudentConfig{h.dim, h.layers, h.leaky_slope},
                      ckpt.tensors.at(0), std::move(weights));
}

}  // namespace glrc
