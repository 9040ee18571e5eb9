pub mod oracle;
pub mod streams;
