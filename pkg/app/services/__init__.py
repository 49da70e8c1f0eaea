# Services package: contains business logic that orchestrates repositories and applies domain rules.
