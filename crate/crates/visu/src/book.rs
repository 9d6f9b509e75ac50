//! Book doc-tests are attached once the guide chapters exist.
