#include "pagpass/model.hpp"

#include "checkpoint.hpp"
#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"
#include "pagpass/io.hpp"
#include "pagpass/ngram.hpp"
#include "pagpass/transformer.hpp"

namespace pagpass {

namespace {
constexpr std::string_view kMagic = "PAGPASSM";
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::kNGram: return "ngram";
    case Backend::kTransformer: return "transformer";
  }
  return "unknown";
}

void NextTokenModel::validate_context(std::span<const TokenId> context) const {
  if (context.empty()) throw InvalidArgument("context must not be empty");
  if (context.size() > window()) throw InvalidArgument("context longer than the model window");
  if (context[0] != kBos) throw InvalidArgument("context must start with <BOS>");
  for (TokenId t : context) {
    if (t >= kVocabSize) throw InvalidArgument("token id out of range");
  }
}

std::vector<double> NextTokenModel::next_distribution(std::span<const TokenId> context) const {
  auto session = start(context);
  const auto dist = session->distribution();
  return {dist.begin(), dist.end()};
}

std::string serialize_model(const NextTokenModel& model) {
  std::string out;
  detail::ByteWriter w(out);
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(model.backend()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.metadata().size()));
  w.put_bytes(model.metadata());
  model.write_body(out);
  w.put<std::uint64_t>(fnv1a64(out));
  return out;
}

void save_model(const NextTokenModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

std::unique_ptr<NextTokenModel> deserialize_model(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not a model checkpoint");
  }
  if (bytes.size() < kMagic.size() + 4 + 1 + 4 + 8) throw DataError("checkpoint truncated");
  const auto payload = bytes.substr(0, bytes.size() - 8);
  detail::ByteReader trailer(bytes.substr(bytes.size() - 8));
  detail::ByteReader in(payload);
  in.get_bytes(kMagic.size());
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  if (trailer.get<std::uint64_t>() != fnv1a64(payload)) throw DataError("checkpoint checksum mismatch");
  const auto backend = in.get<std::uint8_t>();
  const auto meta_len = in.get<std::uint32_t>();
  std::string metadata(in.get_bytes(meta_len));

  std::unique_ptr<NextTokenModel> model;
  switch (static_cast<Backend>(backend)) {
    case Backend::kNGram: model = NGramModel::read_body(in); break;
    case Backend::kTransformer: model = TransformerModel::read_body(in); break;
    default: throw DataError("checkpoint has unknown backend " + std::to_string(backend));
  }
  if (!in.done()) throw DataError("checkpoint has trailing bytes");
  model->set_metadata(std::move(metadata));
  return model;
}

std::unique_ptr<NextTokenModel> load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace pagpass
