//! Hosts the guide chapters as doc-tested modules so `cargo test --doc`
//! keeps every code block in `book/` compiling and passing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
