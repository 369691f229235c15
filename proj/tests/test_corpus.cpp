#include <gtest/gtest.h>

#include "longdep/corpus.hpp"
#include "longdep/errors.hpp"
#include "longdep/tokenizer.hpp"
#include "support.hpp"

using namespace longdep;
using longdep::testing::TempDir;
using longdep::testing::write_text;

namespace {

std::shared_ptr<const Tokenizer> whitespace_tokenizer() {
    return std::make_shared<const Tokenizer>(TokenizerSpec{}, std::make_shared<Vocabulary>());
}

Document n_tokens(std::size_t n) {
    Document d;
    d.id = "d";
    for (std::size_t t = 0; t < n; ++t) d.tokens.push_back(static_cast<TokenId>(t % 97));
    return d;
}

}  // namespace

TEST(Tokenizer, WhitespaceIsPureAndRoundTrips) {
    auto tok = whitespace_tokenizer();
    const auto a = tok->encode("the cat  sat\n on the mat");
    const auto b = tok->encode("the cat  sat\n on the mat");
    EXPECT_EQ(a.ids, b.ids);
    ASSERT_EQ(a.ids.size(), 6u);
    EXPECT_EQ(a.ids[0], a.ids[4]);
    EXPECT_TRUE(a.joined_by_space);
    EXPECT_EQ(tok->decode(a.ids, a.joined_by_space), "the cat sat on the mat");
}

TEST(Tokenizer, ByteFallbackForTextWithoutWhitespace) {
    auto tok = whitespace_tokenizer();
    const auto t = tok->encode("abca");
    ASSERT_EQ(t.ids.size(), 4u);
    EXPECT_FALSE(t.joined_by_space);
    EXPECT_EQ(t.ids[0], t.ids[3]);
    EXPECT_EQ(tok->decode(t.ids, t.joined_by_space), "abca");
}

TEST(Tokenizer, FrozenVocabularyMapsUnseenToUnknown) {
    auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"a", "b"});
    vocab->freeze();
    Tokenizer tok(TokenizerSpec{}, vocab);
    const auto t = tok.encode("a zzz b");
    EXPECT_EQ(t.ids, (std::vector<TokenId>{0, 2, 1}));
    EXPECT_EQ(vocab->size(), 2u);
    EXPECT_EQ(vocab->token(2), "<unk>");
}

TEST(Ingest, JsonlFieldMapping) {
    TempDir dir;
    write_text(dir / "c.jsonl", R"({"id":"d1","text":"hello world","source":"book"})" "\n");
    DocumentReader r(dir / "c.jsonl", InputFormat::jsonl, whitespace_tokenizer());
    auto d = r.next();
    ASSERT_TRUE(d);
    EXPECT_EQ(d->id, "d1");
    EXPECT_EQ(d->source, "book");
    EXPECT_EQ(d->text, "hello world");
    EXPECT_EQ(d->tokens.size(), 2u);
    EXPECT_FALSE(r.next());
}

TEST(Ingest, EmptyFileYieldsNothing) {
    TempDir dir;
    write_text(dir / "empty.jsonl", "");
    DocumentReader r(dir / "empty.jsonl", InputFormat::jsonl);
    EXPECT_FALSE(r.next());
    EXPECT_EQ(r.skipped(), 0u);
    EXPECT_TRUE(r.diagnostics().empty());
}

TEST(Ingest, MalformedLinesAreSkippedAndCounted) {
    TempDir dir;
    write_text(dir / "c.jsonl",
               "{\"id\":\"a\",\"text\":\"x\"}\n"
               "{\"id\":\"b\",\"text\":\n"
               "{\"id\":\"c\",\"text\":\"y\"}\n"
               "{\"id\":\"d\",\"text\":\"z\"}\n");
    DocumentReader r(dir / "c.jsonl", InputFormat::jsonl);
    const auto docs = read_all(r);
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(r.skipped(), 1u);
    EXPECT_EQ(docs[0].source, "c");  // file stem when absent
}

TEST(Ingest, DuplicateAndIncompleteRecordsSkipped) {
    TempDir dir;
    write_text(dir / "c.jsonl",
               "{\"id\":\"a\",\"text\":\"x\"}\n"
               "{\"id\":\"a\",\"text\":\"again\"}\n"
               "{\"text\":\"no id\"}\n"
               "{\"id\":\"b\"}\n"
               "\n");
    DocumentReader r(dir / "c.jsonl", InputFormat::jsonl);
    EXPECT_EQ(read_all(r).size(), 1u);
    EXPECT_EQ(r.skipped(), 3u);
}

TEST(Ingest, PlainDirectoryWalkIsSortedWithSources) {
    TempDir dir;
    write_text(dir / "corpus/books/b.txt", "beta");
    write_text(dir / "corpus/books/a.txt", "alpha");
    write_text(dir / "corpus/code/x.txt", "code");
    write_text(dir / "corpus/top.txt", "top");
    DocumentReader r(dir / "corpus", InputFormat::plain_dir);
    const auto docs = read_all(r);
    ASSERT_EQ(docs.size(), 4u);
    EXPECT_EQ(docs[0].id, "books/a.txt");
    EXPECT_EQ(docs[0].source, "books");
    EXPECT_EQ(docs[2].source, "code");
    EXPECT_EQ(docs[3].id, "top.txt");
    EXPECT_EQ(docs[3].source, "corpus");
}

TEST(Ingest, UnreadablePathIsFatal) {
    EXPECT_THROW(DocumentReader("/nonexistent/longdep.jsonl", InputFormat::jsonl), IngestError);
    TempDir dir;
    EXPECT_THROW(DocumentReader(dir.path(), InputFormat::jsonl), IngestError);
}

TEST(Segment, DefaultGeometry) {
    const auto g = segment(n_tokens(32768), 128, 32768);
    EXPECT_EQ(g.size(), 256u);
}

TEST(Segment, RemainderDiscarded) {
    const auto g = segment(n_tokens(257), 128, 32768);
    EXPECT_EQ(g.size(), 2u);
    EXPECT_EQ(g.kept_tokens().size(), 256u);
    EXPECT_EQ(g.original_len(), 257u);
}

TEST(Segment, TooShortCarriesDocId) {
    Document d = n_tokens(200);
    d.id = "short-doc";
    try {
        segment(d, 128, 32768);
        FAIL() << "expected DocumentTooShort";
    } catch (const DocumentTooShort& e) {
        EXPECT_EQ(e.doc_id(), "short-doc");
    }
}

TEST(Segment, TruncatesAtM) {
    const auto g = segment(n_tokens(1000), 64, 300);
    EXPECT_EQ(g.size(), 4u);
    for (std::size_t t = 0; t < 256; ++t) EXPECT_EQ(g.kept_tokens()[t], t % 97);
}

TEST(Segment, InvalidParameters) {
    EXPECT_THROW(segment(n_tokens(100), 0, 100), ConfigError);
    EXPECT_THROW(segment(n_tokens(100), 64, 100), ConfigError);
}

TEST(Segment, CarriesDecodedText) {
    auto tok = whitespace_tokenizer();
    Document d;
    d.id = "t";
    d.text = "a b c d e";
    d.tokens = tok->encode(d.text).ids;
    const auto g = segment(d, 2, 100, tok.get());
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g.segment(0).text, "a b");
    EXPECT_EQ(g.segment(1).text, "c d");
}
