// SPDX-License-Identifier: Apache-2.0
//! Infer natural-language test intents for Appium GUI test scripts.
//!
//! Each operation in a script is explained either from the GUI (layout,
//! OCR and a captioned widget image) or from the app code that handles the
//! widget. The per-operation intents are then folded into one script intent.

pub mod backend;
pub mod code;
pub mod gui;
pub mod layout;
pub mod lex;
pub mod script;
pub mod metrics;
pub mod pipeline;
