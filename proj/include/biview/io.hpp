#pragma once

#include <string>

#include "biview/evalkit.hpp"
#include "biview/graph.hpp"
#include "biview/matrix.hpp"

namespace biview::io {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Embedding TSV: leading '#' comment lines carry the config fingerprint and
// role, data rows are `node_id \t v1 \t ... \t vd`.
void write_embedding_tsv(const std::string& path, const kg::KnowledgeGraph& kg,
                         const EmbeddingMatrix& embedding, const std::string& fingerprint);
EmbeddingMatrix read_embedding_tsv(const std::string& path, const kg::KnowledgeGraph& kg,
                                   std::string* fingerprint = nullptr);

// Per-node CSV `node,degree,pagerank,betweenness`.
void write_centrality_csv(const std::string& path, const kg::KnowledgeGraph& kg,
                          const Matrix& values, const std::string& fingerprint);
Matrix read_centrality_csv(const std::string& path, const kg::KnowledgeGraph& kg,
                           std::string* fingerprint = nullptr);

// `node_id,x,y,class` rows; unlabeled nodes get an empty class.
void write_pca_csv(const std::string& path, const kg::KnowledgeGraph& kg,
                   const Matrix& projection, const std::string& fingerprint);

// Confusion matrix CSV, rows = true classes.
void write_confusion_csv(const std::string& path, const eval::EvalReport& report,
                         const std::string& fingerprint);

// Fingerprint embedded in an artifact: `# config_fingerprint=...` comment for
// tabular files, the `config_fingerprint` field for JSON reports. Empty when
// the file carries none.
std::string artifact_fingerprint(const std::string& path);

}  // namespace biview::io
