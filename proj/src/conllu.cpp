#include "dataemb/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dataemb/error.hpp"

namespace dataemb {

namespace {

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::optional<int> to_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string field(std::string_view s) { return s == "_" ? std::string() : std::string(s); }

std::string out_field(const std::string& s) { return s.empty() ? "_" : s; }

struct PendingSentence {
  Sentence sentence;
  std::vector<std::size_t> head_lines;  // line number per token, for range errors
  std::optional<std::string> misc_source;
  std::size_t misc_source_line = 0;
};

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "dev") return Split::Dev;
  if (name == "test") return Split::Test;
  throw UsageError("unknown split '" + std::string(name) + "'");
}

bool Sentence::has_tree() const {
  if (tokens.empty()) return false;
  return std::all_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.head.has_value(); });
}

std::string Sentence::text() const {
  std::string out;
  for (const Token& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.form;
  }
  return out;
}

void Treebank::recount() {
  word_count = 0;
  for (const Sentence& s : sentences) word_count += s.size();
}

std::string format_misc(const std::map<std::string, std::string>& misc) {
  if (misc.empty()) return "_";
  std::string out;
  for (const auto& [key, value] : misc) {
    if (!out.empty()) out.push_back('|');
    out += key;
    if (!value.empty()) {
      out.push_back('=');
      out += value;
    }
  }
  return out;
}

std::string format_feats(const std::set<std::string>& morph) {
  if (morph.empty()) return "_";
  std::string out;
  for (const std::string& f : morph) {
    if (!out.empty()) out.push_back('|');
    out += f;
  }
  return out;
}

Treebank parse_conllu(std::string_view text, const std::string& source_id, Split split) {
  Treebank tb;
  tb.source_id = source_id;
  tb.split = split;

  PendingSentence pending;
  bool open = false;

  auto finish = [&](std::size_t line_no) {
    if (!open) return;
    Sentence& s = pending.sentence;
    const int n = static_cast<int>(s.tokens.size());
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      if (t.head && (*t.head < 0 || *t.head > n)) {
        throw ParseError(pending.head_lines[i], "head " + std::to_string(*t.head) + " out of range");
      }
    }
    if (pending.misc_source) {
      if (tb.source_id.empty()) {
        tb.source_id = *pending.misc_source;
      } else if (*pending.misc_source != tb.source_id) {
        throw ParseError(pending.misc_source_line, "dataset '" + *pending.misc_source +
                                                       "' does not match source '" + tb.source_id + "'");
      }
    }
    if (!s.tokens.empty() || !s.comments.empty() || !s.extra_lines.empty()) {
      tb.sentences.push_back(std::move(s));
    }
    pending = PendingSentence{};
    open = false;
    (void)line_no;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      finish(line_no);
      continue;
    }
    open = true;
    Sentence& s = pending.sentence;
    if (line.front() == '#') {
      std::string_view c = line.substr(1);
      if (!c.empty() && c.front() == ' ') c.remove_prefix(1);
      s.comments.emplace_back(c);
      continue;
    }

    auto cols = split_on(line, '\t');
    if (cols.size() != 10) {
      throw ParseError(line_no, "expected 10 columns, found " + std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) {
      s.extra_lines.push_back({s.tokens.size(), std::string(line)});
      continue;
    }
    auto id = to_int(cols[0]);
    if (!id) throw ParseError(line_no, "non-integer id '" + std::string(cols[0]) + "'");
    const int expected = static_cast<int>(s.tokens.size()) + 1;
    if (*id < expected) throw ParseError(line_no, "duplicate token id " + std::to_string(*id));
    if (*id != expected) {
      throw ParseError(line_no, "token id " + std::to_string(*id) + " out of sequence (expected " +
                                    std::to_string(expected) + ")");
    }

    Token t;
    t.id = *id;
    t.form = field(cols[1]);
    t.lemma = field(cols[2]);
    t.upos = field(cols[3]);
    t.xpos = field(cols[4]);
    if (cols[5] != "_") {
      for (std::string_view f : split_on(cols[5], '|')) {
        if (std::count(f.begin(), f.end(), '=') != 1) {
          throw ParseError(line_no, "malformed feature '" + std::string(f) + "'");
        }
        t.morph.emplace(f);
      }
    }
    if (cols[6] != "_") {
      auto head = to_int(cols[6]);
      if (!head) throw ParseError(line_no, "non-integer head '" + std::string(cols[6]) + "'");
      if (*head == t.id) throw ParseError(line_no, "token is its own head");
      if (*head < 0) throw ParseError(line_no, "head " + std::to_string(*head) + " out of range");
      t.head = *head;
    }
    t.deprel = field(cols[7]);
    t.deps = field(cols[8]);
    if (cols[9] != "_") {
      for (std::string_view entry : split_on(cols[9], '|')) {
        std::size_t eq = entry.find('=');
        std::string key(entry.substr(0, eq));
        std::string value = eq == std::string_view::npos ? std::string() : std::string(entry.substr(eq + 1));
        t.misc[key] = value;
      }
    }
    if (auto it = t.misc.find(std::string(kDatasetMiscKey)); it != t.misc.end()) {
      if (pending.misc_source && *pending.misc_source != it->second) {
        throw ParseError(line_no, "conflicting dataset ids '" + *pending.misc_source + "' and '" +
                                      it->second + "' within one sentence");
      }
      if (!pending.misc_source) pending.misc_source_line = line_no;
      pending.misc_source = it->second;
    }
    s.tokens.push_back(std::move(t));
    pending.head_lines.push_back(line_no);
  }
  finish(line_no);

  for (Sentence& s : tb.sentences) {
    if (!tb.source_id.empty()) s.source_id = tb.source_id;
  }
  tb.recount();
  return tb;
}

std::string write_sentence(const Sentence& sentence, const std::string& stamp_source) {
  std::ostringstream out;
  for (const std::string& c : sentence.comments) out << "# " << c << '\n';
  std::size_t extra = 0;
  auto flush_extra = [&](std::size_t before) {
    while (extra < sentence.extra_lines.size() && sentence.extra_lines[extra].before_token <= before) {
      out << sentence.extra_lines[extra].raw << '\n';
      ++extra;
    }
  };
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    flush_extra(i);
    const Token& t = sentence.tokens[i];
    auto misc = t.misc;
    if (!stamp_source.empty()) misc[std::string(kDatasetMiscKey)] = stamp_source;
    out << t.id << '\t' << out_field(t.form) << '\t' << out_field(t.lemma) << '\t' << out_field(t.upos) << '\t'
        << out_field(t.xpos) << '\t' << format_feats(t.morph) << '\t'
        << (t.head ? std::to_string(*t.head) : std::string("_")) << '\t' << out_field(t.deprel) << '\t'
        << out_field(t.deps) << '\t' << format_misc(misc) << '\n';
  }
  flush_extra(sentence.tokens.size());
  out << '\n';
  return out.str();
}

std::string write_conllu(const Treebank& tb, bool embed_source_in_misc) {
  std::string out;
  for (const Sentence& s : tb.sentences) {
    out += write_sentence(s, embed_source_in_misc ? tb.source_id : std::string());
  }
  return out;
}

Treebank read_conllu_file(const std::string& path, const std::string& source_id, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_conllu(buf.str(), source_id, split);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_conllu_file(const std::string& path, const Treebank& tb, bool embed_source_in_misc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << write_conllu(tb, embed_source_in_misc);
}

}  // namespace dataemb
