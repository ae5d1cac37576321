#include "mte/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mte/error.hpp"

namespace mte {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'M', 'T', 'E', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  char b[4];
  if (!in.read(b, 4)) throw DataError("truncated checkpoint: " + path);
  std::uint32_t v;
  std::memcpy(&v, b, 4);
  return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  char b[8];
  if (!in.read(b, 8)) throw DataError("truncated checkpoint: " + path);
  std::uint64_t v;
  std::memcpy(&v, b, 8);
  return v;
}

json tasks_to_json(const std::vector<TaskSpec>& tasks) {
  json arr = json::array();
  for (const TaskSpec& t : tasks) {
    json jt;
    jt["name"] = t.name;
    jt["kind"] = t.kind == TaskSpec::Kind::Classification ? "classification" : "regression";
    jt["classes"] = t.classes;
    arr.push_back(jt);
  }
  return arr;
}

std::vector<TaskSpec> tasks_from_json(const json& arr) {
  std::vector<TaskSpec> tasks;
  for (const json& jt : arr) {
    if (jt.at("kind") == "classification") {
      tasks.push_back(TaskSpec::classification(jt.at("name"), jt.at("classes")));
    } else {
      tasks.push_back(TaskSpec::regression(jt.at("name")));
    }
  }
  return tasks;
}

void write_container(const std::string& path, const json& descriptor,
                     const std::vector<Param*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  const std::string desc = descriptor.dump();
  put_u32(out, static_cast<std::uint32_t>(desc.size()));
  out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, static_cast<std::uint32_t>(p->value.shape.size()));
    for (std::size_t d : p->value.shape) put_u64(out, d);
    out.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

struct Container {
  json descriptor;
  std::vector<Param> params;
};

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  const std::uint32_t desc_len = get_u32(in, path);
  std::string desc(desc_len, '\0');
  if (!in.read(desc.data(), desc_len)) throw DataError("truncated checkpoint: " + path);

  Container c;
  try {
    c.descriptor = json::parse(desc);
  } catch (const json::exception&) {
    throw DataError("corrupt checkpoint descriptor: " + path);
  }
  const std::uint32_t n_params = get_u32(in, path);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("truncated checkpoint: " + path);
    const std::uint32_t ndim = get_u32(in, path);
    Shape shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d) shape[d] = get_u64(in, path);
    Tensor t(shape);
    if (!in.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double)))) {
      throw DataError("truncated checkpoint: " + path);
    }
    c.params.push_back(Param{std::move(name), std::move(t)});
  }
  return c;
}

void fill_params(const std::vector<Param*>& dst, const Container& src, const std::string& path) {
  if (dst.size() != src.params.size()) {
    throw DataError("checkpoint has " + std::to_string(src.params.size()) + " tensors, model has " +
                    std::to_string(dst.size()) + ": " + path);
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->name != src.params[i].name) {
      throw DataError("checkpoint tensor '" + src.params[i].name + "' does not match model '" +
                      dst[i]->name + "': " + path);
    }
    if (dst[i]->value.shape != src.params[i].value.shape) {
      throw DataError("checkpoint tensor '" + src.params[i].name + "' shape " +
                      shape_str(src.params[i].value.shape) + " does not match model " +
                      shape_str(dst[i]->value.shape) + ": " + path);
    }
    dst[i]->value.data = src.params[i].value.data;
    dst[i]->value.grad.reset();
  }
}

}  // namespace

void save_checkpoint(MultiTaskModel& model, const std::string& path) {
  json d;
  d["model"] = "multitask";
  d["encoder"] = encoder_name(model.kind());
  d["seed"] = model.seed();
  const ModelDims& dims = model.dims();
  d["embed_dim"] = dims.embed_dim;
  d["max_len"] = dims.max_len;
  d["conv_filters"] = dims.conv_filters;
  d["conv_widths"] = dims.conv_widths;
  d["rnn_hidden"] = dims.rnn_hidden;
  d["shared_width"] = dims.shared_width;
  d["task_hidden"] = dims.task_hidden;
  d["dropout"] = dims.dropout_rate;
  d["tasks"] = tasks_to_json(model.tasks());
  write_container(path, d, model.params());
}

void save_checkpoint(EnsembleModel& model, const std::string& path) {
  json d;
  d["model"] = "ensemble";
  d["seed"] = model.seed();
  const EnsembleDims& dims = model.dims();
  d["rep_width"] = dims.rep_width;
  d["shared1"] = dims.shared1;
  d["shared2"] = dims.shared2;
  d["task1"] = dims.task1;
  d["task2"] = dims.task2;
  d["dropout"] = dims.dropout_rate;
  d["projector_hidden"] = dims.projector_hidden;
  d["feat_raw_width"] = model.feat_raw_width();
  d["tasks"] = tasks_to_json(model.tasks());
  write_container(path, d, model.params());
}

std::string checkpoint_descriptor(const std::string& path) {
  return read_container(path).descriptor.dump();
}

MultiTaskModel load_multitask_checkpoint(const std::string& path, const EmbeddingTable* table,
                                         std::optional<EncoderKind> expect) {
  const Container c = read_container(path);
  const json& d = c.descriptor;
  try {
    if (d.at("model") != "multitask") {
      throw DataError("checkpoint is a '" + d.at("model").get<std::string>() +
                      "' model, expected multitask: " + path);
    }
    const EncoderKind kind = encoder_by_name(d.at("encoder"));
    if (expect && *expect != kind) {
      throw DataError("checkpoint encoder descriptor '" + d.at("encoder").get<std::string>() +
                      "' does not match requested '" + encoder_name(*expect) + "': " + path);
    }
    ModelDims dims;
    dims.embed_dim = d.at("embed_dim");
    dims.max_len = d.at("max_len");
    dims.conv_filters = d.at("conv_filters");
    dims.conv_widths = d.at("conv_widths").get<std::vector<std::size_t>>();
    dims.rnn_hidden = d.at("rnn_hidden");
    dims.shared_width = d.at("shared_width");
    dims.task_hidden = d.at("task_hidden");
    dims.dropout_rate = d.at("dropout");
    MultiTaskModel model(kind, tasks_from_json(d.at("tasks")), table, dims,
                         d.at("seed").get<std::uint64_t>());
    fill_params(model.params(), c, path);
    return model;
  } catch (const json::exception&) {
    throw DataError("corrupt checkpoint descriptor: " + path);
  }
}

EnsembleModel load_ensemble_checkpoint(const std::string& path) {
  const Container c = read_container(path);
  const json& d = c.descriptor;
  try {
    if (d.at("model") != "ensemble") {
      throw DataError("checkpoint is a '" + d.at("model").get<std::string>() +
                      "' model, expected ensemble: " + path);
    }
    EnsembleDims dims;
    dims.rep_width = d.at("rep_width");
    dims.shared1 = d.at("shared1");
    dims.shared2 = d.at("shared2");
    dims.task1 = d.at("task1");
    dims.task2 = d.at("task2");
    dims.dropout_rate = d.at("dropout");
    dims.projector_hidden = d.at("projector_hidden");
    EnsembleModel model(tasks_from_json(d.at("tasks")), dims, d.at("seed").get<std::uint64_t>(),
                        d.at("feat_raw_width").get<std::size_t>());
    fill_params(model.params(), c, path);
    return model;
  } catch (const json::exception&) {
    throw DataError("corrupt checkpoint descriptor: " + path);
  }
}

}  // namespace mte
