pub mod image_oracle;
