// SPDX-License-Identifier: Apache-2.0
//! Code-side intent: localize the handler of a widget id, inline its helper
//! calls, parse it, and turn AST paths into a description.

pub mod ast;
pub mod inline;
pub mod intent;
pub mod paths;
pub mod source;
pub mod templates;

pub use ast::{build_ast, Ast, AstError, AstNode, OPAQUE};
pub use inline::{inline_nested, inline_nested_in, DEFAULT_INLINE_DEPTH};
pub use intent::code_intent;
pub use paths::{extract_paths, subtokenize, AstPath, DEFAULT_MAX_PATH_LEN};
pub use source::{find_candidate_files, SourceIndex};
pub use templates::{localize, match_templates, prioritize, ResponseMethod, Template};
